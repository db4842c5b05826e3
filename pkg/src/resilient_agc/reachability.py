"""Ellipsoid geometry, unsafe-set representation, and Monte Carlo reachability sampling."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class Ellipsoid:
    """Origin-centered set {x : x' W^-1 x <= 1} with W symmetric positive definite."""
    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W must be a square matrix")
        if not np.allclose(W, W.T, atol=1e-10):
            raise ValueError("W must be symmetric")
        try:
            scipy.linalg.cholesky(W, lower=True)
        except scipy.linalg.LinAlgError:
            raise ValueError("W must be positive definite")
        object.__setattr__(self, "W", W)

    def level(self, x):
        """x' W^-1 x via a Cholesky solve, never an explicit inverse.

        Accepts a single state or an (N, n) batch; batches return an
        N-vector of levels.
        """
        c, low = scipy.linalg.cho_factor(self.W)
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return np.einsum("ij,ji->i", x, scipy.linalg.cho_solve((c, low), x.T))
        return float(x @ scipy.linalg.cho_solve((c, low), x))


@dataclass(frozen=True)
class HalfSpace:
    """Unsafe region {x : c'x >= g}."""
    c: np.ndarray
    g: float

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if np.linalg.norm(c) == 0:
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class UnsafeSet:
    halfspaces: tuple

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        if len(hs) == 0:
            raise ValueError("unsafe set needs at least one half-space")
        object.__setattr__(self, "halfspaces", hs)

    @classmethod
    def frequency_limit(cls, n_states, limit):
        """|df| >= limit expressed as two half-spaces on the first coordinate."""
        c = np.zeros(n_states)
        c[0] = 1.0
        return cls((HalfSpace(c, limit), HalfSpace(-c, limit)))


@dataclass(frozen=True)
class Bounds:
    gamma: np.ndarray        # per-input setpoint bounds, all > 0
    gamma_omega: float = 0.0 # disturbance bound

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if np.any(g <= 0):
            raise ValueError("input bounds must be strictly positive")
        if self.gamma_omega < 0:
            raise ValueError("disturbance bound must be >= 0")
        object.__setattr__(self, "gamma", g)


def hyperplane_distance(e: Ellipsoid, h: HalfSpace) -> float:
    """Shortest distance from the ellipsoid to the hyperplane c'x = g.

    Positive means the ellipsoid is strictly separated from the unsafe
    half-space.
    """
    return (abs(h.g) - np.sqrt(h.c @ e.W @ h.c)) / np.linalg.norm(h.c)


def check_separation(e: Ellipsoid, unsafe: UnsafeSet, tol: float = 0.0):
    """Margins c'Wc - g^2 per half-space; safe iff all margins <= tol."""
    margins = np.array([h.c @ e.W @ h.c - h.g ** 2 for h in unsafe.halfspaces])
    return margins, bool(np.all(margins <= tol))


def contains(e: Ellipsoid, x, tol: float = 1e-9) -> bool:
    return e.level(x) <= 1.0 + tol


STRATEGIES = ("uniform", "bang_bang", "constant_extreme")


def sample_reachable(model, bounds: Bounds, horizon: int, trials: int, seed,
                     strategies=STRATEGIES):
    """Simulate trials from x(0)=0 under admissible inputs; return every visited state.

    Strategies cycle across trials: per-step uniform draws, per-step
    bang-bang sign flips at the bounds, and a constant extreme held for the
    whole trajectory.  Bang-bang and constant-extreme trials matter because
    worst-case excursions of linear dynamics under box bounds occur at
    vertices; uniform sampling alone under-covers them.

    Each trial draws from its own spawned substream, so the visited set is
    reproducible for a fixed seed no matter how trials are scheduled.
    """
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be >= 1")
    n, m = model.n, model.m
    A, B = model.A, model.B
    h = model.H[:, 0]
    gam, gw = bounds.gamma, bounds.gamma_omega

    # unit-scale draws per trial, scaled by the bounds afterwards so that
    # shared seeds give monotone excursions in the bounds
    U = np.empty((trials, horizon, m))
    Wd = np.empty((trials, horizon))
    streams = np.random.SeedSequence(seed).spawn(trials)
    for t in range(trials):
        rng = np.random.default_rng(streams[t])
        strat = strategies[t % len(strategies)]
        if strat == "uniform":
            uu = rng.uniform(-1.0, 1.0, size=(horizon, m))
            ww = rng.uniform(-1.0, 1.0, size=horizon)
        elif strat == "bang_bang":
            uu = np.sign(rng.uniform(-1.0, 1.0, size=(horizon, m)))
            ww = np.sign(rng.uniform(-1.0, 1.0, size=horizon))
        elif strat == "constant_extreme":
            uu = np.tile(np.sign(rng.uniform(-1.0, 1.0, size=m)), (horizon, 1))
            ww = np.full(horizon, np.sign(rng.uniform(-1.0, 1.0)))
        else:
            raise ValueError(f"unknown strategy {strat!r}")
        U[t] = uu * gam
        Wd[t] = ww * gw

    visited = np.empty((trials, horizon, n))
    x = np.zeros((trials, n))
    for k in range(horizon):
        x = x @ A.T + U[:, k, :] @ B.T + np.outer(Wd[:, k], h)
        visited[:, k, :] = x
    return visited.reshape(trials * horizon, n)

"""Invariant-ellipsoid constraint synthesis via semidefinite programming.

For a fixed contraction rate `a` the feasibility condition is one large
linear matrix inequality in the ellipsoid shape W and the squared setpoint
bounds r_i.  Maximizing sum(sqrt(r_i)) over the feasible set yields the
least restrictive certified bounds; an outer grid search handles the
nonconvex dependence on `a`.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import cvxpy as cp
import scipy.linalg

from .reachability import Bounds, Ellipsoid, UnsafeSet

DEFAULT_A_GRID = tuple(np.round(np.arange(0.02, 0.981, 0.02), 10))


class InfeasibleSynthesisError(Exception):
    """No grid point admitted a certificate."""

    def __init__(self, per_a_status):
        self.per_a_status = per_a_status
        super().__init__(
            "synthesis infeasible at every grid point; relax the problem "
            "(smaller disturbance bound or larger safety margins g)")


@dataclass(frozen=True)
class SynthesisProblem:
    model: object            # DiscreteModel
    bounds: Bounds           # physical setpoint and disturbance bounds
    unsafe: UnsafeSet
    a_grid: tuple = DEFAULT_A_GRID

    def __post_init__(self):
        grid = tuple(float(a) for a in self.a_grid)
        if len(grid) == 0 or any(not (0.0 < a < 1.0) for a in grid):
            raise ValueError("a_grid must be nonempty with entries strictly in (0,1)")
        object.__setattr__(self, "a_grid", grid)
        stable, rho = check_schur_stability(self.model.A)
        if not stable:
            raise ValueError(f"discretized A must be Schur stable, spectral radius {rho:.6f}")


@dataclass(frozen=True)
class ResilientResult:
    W: np.ndarray
    gamma_hat: np.ndarray
    r: np.ndarray
    a: float
    objective: float
    per_a_status: tuple

    @property
    def ellipsoid(self):
        return Ellipsoid(0.5 * (self.W + self.W.T))


def check_schur_stability(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    return rho < 1.0 - 1e-9, rho


def budget_channels(m, gamma_omega):
    """Number of bounded signals sharing the (1-a) dissipation budget.

    The step-to-step energy estimate grants each bounded signal an equal
    (1-a)/p share; p must count every signal that can inject energy, i.e.
    the m setpoints plus the disturbance when its bound is nonzero.
    Splitting over m alone while also feeding the disturbance its own share
    would certify only V <= (m+1)/m, and sampled bang-bang trajectories do
    exceed level 1 in that case.
    """
    return m + (1 if gamma_omega > 0 else 0)


def assemble_lmi(model, W, r, gamma_omega, a):
    """The (n+m+1+n)-square certificate matrix, affine in (W, r).

    Accepts either numeric arrays or cvxpy expressions for W and r and
    returns the matching kind.
    """
    if not (0.0 < a < 1.0):
        raise ValueError("a must lie in (0,1)")
    A, B, H = model.A, model.B, model.H
    n, m = model.n, model.m
    k = (1.0 - a) / budget_channels(m, gamma_omega)
    gw2 = float(gamma_omega) ** 2
    symbolic = isinstance(W, cp.expressions.expression.Expression) or \
        isinstance(r, cp.expressions.expression.Expression)

    Zn_m = np.zeros((n, m))
    Zn_1 = np.zeros((n, 1))
    Zm_1 = np.zeros((m, 1))
    if symbolic:
        Ru = cp.diag(r)
        rows = [
            [a * W, Zn_m, Zn_1, W @ A.T],
            [Zn_m.T, k * Ru, Zm_1, Ru @ B.T],
            [Zn_1.T, Zm_1.T, np.array([[k * gw2]]), gw2 * H.T],
            [A @ W, B @ Ru, gw2 * H, W],
        ]
        return cp.bmat(rows)
    W = np.asarray(W, dtype=float)
    Ru = np.diag(np.asarray(r, dtype=float))
    return np.block([
        [a * W, Zn_m, Zn_1, W @ A.T],
        [Zn_m.T, k * Ru, Zm_1, Ru @ B.T],
        [Zn_1.T, Zm_1.T, np.array([[k * gw2]]), gw2 * H.T],
        [A @ W, B @ Ru, gw2 * H, W],
    ])


def solve_fixed_a(problem: SynthesisProblem, a, solver="CLARABEL"):
    """One SDP solve at contraction rate a.

    Returns (status, W, r); W and r are None unless the solve produced a
    usable point.  Solver trouble at a single grid point is reported in the
    status, never raised.
    """
    model = problem.model
    n, m = model.n, model.m
    gamma = problem.bounds.gamma
    W = cp.Variable((n, n), symmetric=True)
    r = cp.Variable(m, nonneg=True)
    t = cp.Variable(m, nonneg=True)

    cons = [W >> 1e-8 * np.eye(n),
            assemble_lmi(model, W, r, problem.bounds.gamma_omega, a) >> 0,
            r <= gamma ** 2]
    for h in problem.unsafe.halfspaces:
        cons.append(cp.quad_form(h.c, W) <= h.g ** 2)
    one = np.ones((1, 1))
    for i in range(m):
        # 2x2 minor [[r_i, t_i],[t_i, 1]] >= 0 encodes t_i <= sqrt(r_i)
        cons.append(cp.bmat([[cp.reshape(r[i], (1, 1), order="C"),
                              cp.reshape(t[i], (1, 1), order="C")],
                             [cp.reshape(t[i], (1, 1), order="C"), one]]) >> 0)

    prob = cp.Problem(cp.Maximize(cp.sum(t)), cons)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob.solve(solver=solver)
    except (cp.SolverError, Exception) as exc:  # noqa: BLE001
        return f"solver_error: {exc}", None, None
    if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return prob.status, W.value, r.value
    return prob.status, None, None


def synthesize(problem: SynthesisProblem, solver="CLARABEL") -> ResilientResult:
    """Grid search over `a`; keep the certificate with the largest bound sum.

    Objective ties break toward the smaller contraction rate.
    """
    best = None
    statuses = []
    for a in problem.a_grid:
        status, W, r = solve_fixed_a(problem, a, solver=solver)
        statuses.append((a, status))
        if W is None:
            continue
        r = np.maximum(r, 0.0)
        obj = float(np.sum(np.sqrt(r)))
        if best is None or obj > best[1] + 1e-12:
            best = (a, obj, W, r)
    if best is None:
        raise InfeasibleSynthesisError(tuple(statuses))
    a, obj, W, r = best
    return ResilientResult(W=0.5 * (W + W.T), gamma_hat=np.sqrt(r), r=r,
                           a=a, objective=obj, per_a_status=tuple(statuses))


def analysis_ellipsoid(model, bounds: Bounds, a_grid=DEFAULT_A_GRID,
                       direction=None, solver="CLARABEL"):
    """Invariant ellipsoid for FIXED input bounds (no tightening).

    Minimizes the extent c'Wc along `direction` (default: frequency axis)
    over the same contraction grid. Used to picture what the system can
    reach when setpoints are only limited by their physical capability.
    """
    r_fixed = np.asarray(bounds.gamma, dtype=float) ** 2
    c = np.zeros(model.n)
    c[0] = 1.0
    if direction is not None:
        c = np.asarray(direction, dtype=float)
    best = None
    for a in a_grid:
        W = cp.Variable((model.n, model.n), symmetric=True)
        lmi = assemble_lmi(model, W, r_fixed, bounds.gamma_omega, float(a))
        prob = cp.Problem(cp.Minimize(cp.quad_form(c, W)),
                          [W >> 1e-8 * np.eye(model.n), lmi >> 0])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=solver)
        except cp.error.SolverError:
            continue
        if prob.status in ("optimal", "optimal_inaccurate") and W.value is not None:
            if best is None or prob.value < best[0] - 1e-12:
                best = (prob.value, 0.5 * (W.value + W.value.T))
    if best is None:
        raise InfeasibleSynthesisError(per_a_status=())
    return Ellipsoid(best[1])


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def verify_certificate(model, result: ResilientResult, unsafe: UnsafeSet,
                       bounds: Bounds, trajectories=1000, steps=500,
                       seed=0) -> CertificateReport:
    """Independent numeric re-check of a synthesized certificate.

    No solver is involved: eigenvalue checks on W and the certificate
    matrix, the safety and bound-cap inequalities, and a seeded Monte Carlo
    sweep confirming x'W^-1 x <= 1 along admissible trajectories from the
    origin.
    """
    checks = []
    W = 0.5 * (result.W + result.W.T)

    sym_res = float(np.max(np.abs(result.W - result.W.T)))
    eigs = np.linalg.eigvalsh(W)
    checks.append(CheckResult("W symmetric", sym_res, sym_res <= 1e-8))
    checks.append(CheckResult("W positive definite (min eig > 0)",
                              float(eigs[0]), eigs[0] > 0))

    lmi = assemble_lmi(model, W, result.r, bounds.gamma_omega, result.a)
    lmi_min = float(np.linalg.eigvalsh(0.5 * (lmi + lmi.T))[0])
    checks.append(CheckResult("certificate matrix PSD (min eig >= -1e-7)",
                              lmi_min, lmi_min >= -1e-7))

    for j, h in enumerate(unsafe.halfspaces):
        res = float(h.c @ W @ h.c - h.g ** 2)
        checks.append(CheckResult(f"c'Wc <= g^2 (half-space {j})", res, res <= 1e-9))

    cap = result.r - bounds.gamma ** 2
    checks.append(CheckResult("r <= gamma^2", float(np.max(cap)),
                              bool(np.max(cap) <= 1e-9)))

    vmax = _max_level_random_admissible(model, W, result.gamma_hat,
                                        bounds.gamma_omega, trajectories,
                                        steps, seed)
    checks.append(CheckResult(
        f"V(k) <= 1 along {trajectories} random admissible trajectories",
        vmax - 1.0, vmax <= 1.0 + 1e-6))
    return CertificateReport(tuple(checks))


def _max_level_random_admissible(model, W, gamma_hat, gamma_omega,
                                 trajectories, steps, seed):
    n, m = model.n, model.m
    A, B = model.A, model.B
    h = model.H[:, 0]
    cf = scipy.linalg.cho_factor(W)

    U = np.empty((trajectories, steps, m))
    Wd = np.empty((trajectories, steps))
    for t, ss in enumerate(np.random.SeedSequence(seed).spawn(trajectories)):
        rng = np.random.default_rng(ss)
        U[t] = rng.uniform(-1.0, 1.0, size=(steps, m)) * gamma_hat
        Wd[t] = rng.uniform(-1.0, 1.0, size=steps) * gamma_omega

    vmax = 0.0
    x = np.zeros((trajectories, n))
    for k in range(steps):
        x = x @ A.T + U[:, k, :] @ B.T + np.outer(Wd[:, k], h)
        v = np.einsum("ij,ij->i", x, scipy.linalg.cho_solve(cf, x.T).T)
        vk = float(np.max(v))
        if vk > vmax:
            vmax = vk
    return vmax

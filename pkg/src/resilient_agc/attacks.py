"""Worst-case attack synthesis: random setpoints, optimal setpoints, sensor injection.

The optimal programs are linear: trajectories of an LTI system are affine
in the inputs, the objective is a single terminal coordinate, and the
admissible signals live in boxes.  Both LPs are posed in sparse multistep
form (states kept as variables tied by equality constraints) because the
unclamped AGC closed loop encountered here is violently unstable and
condensing the dynamics into powers of the transition matrix overflows
long before N = 50.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .control import AgcController
from .reachability import Bounds


@dataclass(frozen=True)
class AttackScenario:
    kind: str              # "setpoint" or "sensor"
    signal: np.ndarray     # (K, m) setpoints, or (K,) sensor injections
    horizon: int
    direction: str = None  # "maximize"/"minimize" for optimal variants
    achieved: float = None # optimal value of df(N), if optimized
    induced_setpoints: np.ndarray = None  # sensor variant: u implied by the program


def _gamma_of(bounds):
    if isinstance(bounds, Bounds):
        return bounds.gamma
    return np.atleast_1d(np.asarray(bounds, dtype=float))


def _direction_sign(direction):
    if direction in ("maximize", "max"):
        return 1.0
    if direction in ("minimize", "min"):
        return -1.0
    raise ValueError(f"direction must be maximize or minimize, got {direction!r}")


def random_setpoint_attack(bounds, K, seed) -> AttackScenario:
    """Per-step per-channel uniform draws inside the active bounds."""
    gam = _gamma_of(bounds)
    rng = np.random.default_rng(seed)
    signal = rng.uniform(-1.0, 1.0, size=(K, len(gam))) * gam
    return AttackScenario(kind="setpoint", signal=signal, horizon=K)


def _resolve_omega(model, N, direction, omega_policy, gamma_omega):
    """Fixed disturbance sequence used inside the optimal programs."""
    if omega_policy == "zero" or gamma_omega == 0.0:
        return np.zeros(N)
    if omega_policy == "worst_case_constant":
        # constant +/-gamma_omega, sign chosen by the aggregate influence on df(N)
        e1 = np.zeros(model.n)
        e1[0] = 1.0
        coeff = 0.0
        row = e1.copy()
        for _ in range(N):
            coeff += float(row @ model.H[:, 0])
            row = row @ model.A
        sgn = _direction_sign(direction) * np.sign(coeff if coeff != 0 else 1.0)
        return np.full(N, sgn * gamma_omega)
    raise ValueError(f"unknown omega_policy {omega_policy!r}")


def setpoint_attack_oracle(model, bounds, N, direction, omega_policy="zero",
                           x0=None):
    """Closed-form extremal setpoints u_i(k) = b_i * sign(+/- [e1' A^(N-1-k) B]_i).

    The terminal frequency is linear in each input sample, so the optimum
    sits at the box vertices with signs given by the impulse-response
    weights.  Returns (signal, df_N).
    """
    gam = _gamma_of(bounds)
    gw = bounds.gamma_omega if isinstance(bounds, Bounds) else 0.0
    sgn = _direction_sign(direction)
    n = model.n
    e1 = np.zeros(n)
    e1[0] = 1.0
    omega = _resolve_omega(model, N, direction, omega_policy, gw)

    weights = np.empty((N, model.m))
    row = e1.copy()
    for k in range(N - 1, -1, -1):
        weights[k] = row @ model.B
        row = row @ model.A
    signal = gam * np.sign(sgn * weights)
    signal[weights == 0.0] = 0.0

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    for k in range(N):
        x = model.A @ x + model.B @ signal[k] + model.H[:, 0] * omega[k]
    return signal, float(x[0])


def optimal_setpoint_attack(model, bounds, N, direction, omega_policy="zero",
                            x0=None) -> AttackScenario:
    """LP over the setpoint sequence maximizing or minimizing df(N)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gam = _gamma_of(bounds)
    gw = bounds.gamma_omega if isinstance(bounds, Bounds) else 0.0
    n, m = model.n, model.m
    _warn_if_ill_conditioned(model.A, N)
    omega = _resolve_omega(model, N, direction, omega_policy, gw)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)

    # variables: x(0..N) then u(0..N-1)
    nx = n * (N + 1)
    nv = nx + m * N
    rows, cols, vals, rhs = [], [], [], []
    row_i = 0
    for j in range(n):
        rows.append(row_i); cols.append(j); vals.append(1.0)
        rhs.append(x0[j]); row_i += 1
    for k in range(N):
        base_x, base_u = n * k, nx + m * k
        for i in range(n):
            rows.append(row_i); cols.append(n * (k + 1) + i); vals.append(1.0)
            for j in range(n):
                if model.A[i, j] != 0.0:
                    rows.append(row_i); cols.append(base_x + j); vals.append(-model.A[i, j])
            for j in range(m):
                if model.B[i, j] != 0.0:
                    rows.append(row_i); cols.append(base_u + j); vals.append(-model.B[i, j])
            rhs.append(float(model.H[i, 0] * omega[k])); row_i += 1
    A_eq = sp.coo_matrix((vals, (rows, cols)), shape=(row_i, nv)).tocsr()

    c = np.zeros(nv)
    c[n * N] = -_direction_sign(direction)
    var_bounds = [(None, None)] * nx + [(-gam[j], gam[j]) for _ in range(N) for j in range(m)]
    res = linprog(c, A_eq=A_eq, b_eq=np.array(rhs), bounds=var_bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"setpoint attack LP failed: {res.message}")
    signal = res.x[nx:].reshape(N, m)
    achieved = float(res.x[n * N])
    return AttackScenario(kind="setpoint", signal=signal, horizon=N,
                          direction=direction, achieved=achieved)


def _warn_if_ill_conditioned(A, N):
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    if rho > 1.0 and rho ** N > 1e12:
        warnings.warn(f"horizon {N} with spectral radius {rho:.3f} gives "
                      f"rho^N ~ {rho ** N:.2e}; expect conditioning trouble",
                      stacklevel=2)


def closed_loop_augmented(model, ctrl: AgcController):
    """Unclamped AGC closed loop on the augmented state z = [x; integral].

    Returns (At, Bd, F, Fd) with z(k+1) = At z(k) + Bd delta(k) and induced
    setpoints u(k) = F z(k) + Fd delta(k), where delta is the sensor
    injection added to the measured frequency.
    """
    n, m = model.n, model.m
    e1 = np.zeros(n)
    e1[0] = 1.0
    kb = (ctrl.K_P + ctrl.K_I) * ctrl.frequency_bias
    Bb = model.B @ ctrl.beta

    At = np.zeros((n + 1, n + 1))
    At[:n, :n] = model.A - kb * np.outer(Bb, e1)
    At[:n, n] = ctrl.K_I * Bb
    At[n, :n] = -ctrl.frequency_bias * e1
    At[n, n] = 1.0
    Bd = np.zeros(n + 1)
    Bd[:n] = -kb * Bb
    Bd[n] = -ctrl.frequency_bias
    F = np.zeros((m, n + 1))
    F[:, :n] = -kb * np.outer(ctrl.beta, e1)
    F[:, n] = ctrl.K_I * ctrl.beta
    Fd = -kb * ctrl.beta
    return At, Bd, F, Fd


def optimal_sensor_attack(model, ctrl: AgcController, bounds, N, direction,
                          x0=None) -> AttackScenario:
    """LP over the measurement injections delta(0..N-1).

    The program constrains the setpoints the controller would issue to stay
    inside the active bounds, so saturation is never triggered at the
    optimum and the closed loop remains linear in delta.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    gam = _gamma_of(bounds)
    n, m = model.n, model.m
    na = n + 1
    At, Bd, F, Fd = closed_loop_augmented(model, ctrl)
    z0 = np.zeros(na)
    if x0 is not None:
        z0[:n] = np.asarray(x0, dtype=float)

    # variables: z(0..N) then delta(0..N-1)
    nz = na * (N + 1)
    nv = nz + N
    rows, cols, vals, rhs = [], [], [], []
    row_i = 0
    for j in range(na):
        rows.append(row_i); cols.append(j); vals.append(1.0)
        rhs.append(z0[j]); row_i += 1
    for k in range(N):
        for i in range(na):
            rows.append(row_i); cols.append(na * (k + 1) + i); vals.append(1.0)
            for j in range(na):
                if At[i, j] != 0.0:
                    rows.append(row_i); cols.append(na * k + j); vals.append(-At[i, j])
            if Bd[i] != 0.0:
                rows.append(row_i); cols.append(nz + k); vals.append(-Bd[i])
            rhs.append(0.0); row_i += 1
    A_eq = sp.coo_matrix((vals, (rows, cols)), shape=(row_i, nv)).tocsr()

    urows, ucols, uvals, ub = [], [], [], []
    row_u = 0
    for k in range(N):
        for i in range(m):
            for s in (1.0, -1.0):
                for j in range(na):
                    if F[i, j] != 0.0:
                        urows.append(row_u); ucols.append(na * k + j); uvals.append(s * F[i, j])
                if Fd[i] != 0.0:
                    urows.append(row_u); ucols.append(nz + k); uvals.append(s * Fd[i])
                ub.append(gam[i]); row_u += 1
    A_ub = sp.coo_matrix((uvals, (urows, ucols)), shape=(row_u, nv)).tocsr()

    c = np.zeros(nv)
    c[na * N] = -_direction_sign(direction)
    res = linprog(c, A_ub=A_ub, b_ub=np.array(ub), A_eq=A_eq,
                  b_eq=np.array(rhs), bounds=[(None, None)] * nv, method="highs")
    if res.status != 0:
        raise RuntimeError(f"sensor attack LP failed: {res.message}")
    z = res.x[:nz].reshape(N + 1, na)
    delta = res.x[nz:]
    induced = z[:N] @ F.T + np.outer(delta, Fd)
    return AttackScenario(kind="sensor", signal=delta, horizon=N,
                          direction=direction, achieved=float(z[N, 0]),
                          induced_setpoints=induced)


def sensor_attack_oracle(model, ctrl: AgcController, bounds, N, direction,
                         x0=None):
    """Independent optimum for the sensor program via a scalar reduction.

    Every channel receives beta_i times one shared command v(k), and the
    injection delta(k) enters that command through a nonzero gain at every
    step, so the adversary can realize any command sequence with
    |v(k)| <= min_i b_i / beta_i.  The program therefore collapses to a
    single-input extremal problem with input vector B beta, solved in
    closed form like the setpoint oracle.  Valid when (K_P + K_I) * bias
    is nonzero.
    """
    gam = _gamma_of(bounds)
    if (ctrl.K_P + ctrl.K_I) * ctrl.frequency_bias == 0.0:
        raise ValueError("scalar reduction needs a nonzero controller gain")
    active = ctrl.beta > 0
    vbar = float(np.min(gam[active] / ctrl.beta[active]))
    sgn = _direction_sign(direction)
    n = model.n
    e1 = np.zeros(n)
    e1[0] = 1.0
    Bb = model.B @ ctrl.beta

    weights = np.empty(N)
    row = e1.copy()
    for k in range(N - 1, -1, -1):
        weights[k] = row @ Bb
        row = row @ model.A
    v = vbar * np.sign(sgn * weights)

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    for k in range(N):
        x = model.A @ x + Bb * v[k]
    return float(x[0])

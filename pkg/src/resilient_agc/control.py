"""AGC proportional-integral control loop, saturation, and closed-loop simulators."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AgcController:
    """PI regulation layer distributing one scalar command over the units.

    ACE(k) = -bias * df(k); the integral accumulates the raw ACE with no
    anti-windup, so saturation at the unit level never feeds back into the
    integrator state.
    """
    frequency_bias: float
    K_P: float
    K_I: float
    beta: np.ndarray
    enforced_bounds: np.ndarray
    integral_state: float = 0.0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.enforced_bounds = np.asarray(self.enforced_bounds, dtype=float)
        if abs(float(np.sum(self.beta)) - 1.0) > 1e-9:
            raise ValueError(f"participation factors must sum to 1, got {np.sum(self.beta)}")
        if np.any(self.beta < 0):
            raise ValueError("participation factors must be >= 0")
        if np.any(self.enforced_bounds <= 0):
            raise ValueError("enforced bounds must be > 0")

    def reset(self):
        self.integral_state = 0.0


def ace(ctrl: AgcController, measured_df: float) -> float:
    return -ctrl.frequency_bias * measured_df


def agc_step(ctrl: AgcController, measured_df: float):
    """One controller update: accumulate ACE, distribute, clamp per channel.

    Returns (u, u_raw, saturated) where saturated flags channels whose raw
    setpoint exceeded the enforced bound.
    """
    e = ace(ctrl, measured_df)
    ctrl.integral_state += e
    command = ctrl.K_P * e + ctrl.K_I * ctrl.integral_state
    u_raw = ctrl.beta * command
    u = np.clip(u_raw, -ctrl.enforced_bounds, ctrl.enforced_bounds)
    saturated = np.abs(u_raw) > ctrl.enforced_bounds + 1e-12
    return u, u_raw, saturated


@dataclass(frozen=True)
class DisturbanceModel:
    bound: float
    dwell_steps: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("disturbance bound must be >= 0")
        if self.dwell_steps < 1:
            raise ValueError("dwell_steps must be >= 1")


def generate_disturbance(dist: DisturbanceModel, K: int) -> np.ndarray:
    """Piecewise-constant w(k), each dwell segment uniform in [-bound, bound]."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(dist.seed)
    n_segments = -(-K // dist.dwell_steps)
    levels = rng.uniform(-1.0, 1.0, size=n_segments) * dist.bound
    return np.repeat(levels, dist.dwell_steps)[:K]


@dataclass
class Trajectory:
    times: np.ndarray          # sampling instants for `states`
    states: np.ndarray         # (len(times), n), states[0] = x0
    u: np.ndarray              # (K, m) applied setpoints, post-saturation
    u_raw: np.ndarray          # (K, m) pre-saturation
    omega: np.ndarray          # (K,)
    attack_signal: np.ndarray  # (K,) sensor injection, zeros otherwise
    sat_flags: np.ndarray      # (K, m) boolean
    controller_times: np.ndarray = None  # set for continuous runs

    @property
    def frequency(self):
        return self.states[:, 0]

    @property
    def saturation_count(self):
        """Number of steps with at least one saturated channel."""
        return int(np.sum(np.any(self.sat_flags, axis=1)))


def _resolve_attack(attack, K, m):
    """Split an optional attack into (setpoint_sequence, sensor_sequence)."""
    if attack is None:
        return None, np.zeros(K)
    signal = np.asarray(attack.signal, dtype=float)
    if attack.kind == "setpoint":
        if signal.shape[0] < K:
            raise ValueError(f"setpoint attack covers {signal.shape[0]} steps, need {K}")
        return signal[:K].reshape(K, m), np.zeros(K)
    if attack.kind == "sensor":
        if signal.shape[0] < K:
            raise ValueError(f"sensor attack covers {signal.shape[0]} steps, need {K}")
        return None, signal[:K]
    raise ValueError(f"unknown attack kind {attack.kind!r}")


def simulate_discrete(model, ctrl: AgcController, dist, K, x0=None,
                      attack=None) -> Trajectory:
    """Closed-loop rollout of x(k+1) = A x(k) + B u(k) + H w(k).

    Setpoint-replacement attacks bypass the controller entirely; their
    signals still pass through the per-unit clamp, which is enforced
    locally and cannot be bypassed.  Sensor attacks shift the frequency
    measurement fed to the controller.
    """
    n, m = model.n, model.m
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    omega = generate_disturbance(dist, K) if dist is not None and dist.bound > 0 \
        else np.zeros(K)
    setpoints, sensor = _resolve_attack(attack, K, m)
    ctrl.reset()

    states = np.empty((K + 1, n))
    states[0] = x
    U = np.empty((K, m))
    U_raw = np.empty((K, m))
    sat = np.empty((K, m), dtype=bool)
    h = model.H[:, 0]
    for k in range(K):
        if setpoints is not None:
            u_raw = setpoints[k]
            u = np.clip(u_raw, -ctrl.enforced_bounds, ctrl.enforced_bounds)
            saturated = np.abs(u_raw) > ctrl.enforced_bounds + 1e-12
        else:
            u, u_raw, saturated = agc_step(ctrl, x[0] + sensor[k])
        x = model.A @ x + model.B @ u + h * omega[k]
        states[k + 1] = x
        U[k], U_raw[k], sat[k] = u, u_raw, saturated
    times = np.arange(K + 1) * model.tau
    return Trajectory(times, states, U, U_raw, omega, sensor, sat)


def simulate_continuous(cont, ctrl: AgcController, tau, T_end, dt, dist=None,
                        x0=None, attack=None) -> Trajectory:
    """RK4 integration with controller updates and input hold every tau seconds."""
    if dt >= tau:
        raise ValueError(f"dt must be < tau, got dt={dt}, tau={tau}")
    n = cont.A_c.shape[0]
    m = cont.B_c.shape[1]
    K = int(round(T_end / tau))
    steps_per_seg = int(round(tau / dt))
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    omega = generate_disturbance(dist, K) if dist is not None and dist.bound > 0 \
        else np.zeros(K)
    setpoints, sensor = _resolve_attack(attack, K, m)
    ctrl.reset()

    A_c, B_c = cont.A_c, cont.B_c
    h_c = cont.H_c[:, 0]
    total = K * steps_per_seg
    states = np.empty((total + 1, n))
    states[0] = x
    U = np.empty((K, m))
    U_raw = np.empty((K, m))
    sat = np.empty((K, m), dtype=bool)
    step = dt
    idx = 1
    for k in range(K):
        if setpoints is not None:
            u_raw = setpoints[k]
            u = np.clip(u_raw, -ctrl.enforced_bounds, ctrl.enforced_bounds)
            saturated = np.abs(u_raw) > ctrl.enforced_bounds + 1e-12
        else:
            u, u_raw, saturated = agc_step(ctrl, x[0] + sensor[k])
        U[k], U_raw[k], sat[k] = u, u_raw, saturated
        drive = B_c @ u + h_c * omega[k]

        def f(xx):
            return A_c @ xx + drive

        for _ in range(steps_per_seg):
            k1 = f(x)
            k2 = f(x + 0.5 * step * k1)
            k3 = f(x + 0.5 * step * k2)
            k4 = f(x + step * k3)
            x = x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            states[idx] = x
            idx += 1
    times = np.arange(total + 1) * dt
    return Trajectory(times, states, U, U_raw, omega, sensor, sat,
                      controller_times=np.arange(K + 1) * tau)

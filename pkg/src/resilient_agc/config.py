"""JSON configuration ingestion for models, controllers, unsafe sets, scenarios."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import GeneratorParams, PowerSystemParams, StorageParams
from .reachability import HalfSpace, UnsafeSet
from .synthesis import DEFAULT_A_GRID


class ConfigError(Exception):
    pass


def load_json(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}")


def _require(d, key, context):
    if key not in d:
        raise ConfigError(f"{context}: missing key '{key}'")
    return d[key]


def parse_model(d) -> tuple:
    """Returns (PowerSystemParams, tau)."""
    if not isinstance(d, dict):
        raise ConfigError("model section must be an object")
    try:
        generators = tuple(
            GeneratorParams(T_t=g["T_t"], T_g=g["T_g"], R=g["R"], gamma=g["gamma"])
            for g in d.get("generators", []))
        storages = tuple(
            StorageParams(T_ES=s["T_ES"], gamma=s["gamma"])
            for s in d.get("storages", []))
        params = PowerSystemParams(
            inertia=_require(d, "inertia", "model"),
            damping=_require(d, "damping", "model"),
            generators=generators,
            storages=storages,
            disturbance_bound=d.get("disturbance_bound", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"model section: {exc}")
    tau = _require(d, "tau", "model")
    if not (isinstance(tau, (int, float)) and tau > 0):
        raise ConfigError(f"model section: tau must be a positive number, got {tau!r}")
    return params, float(tau)


def parse_controller(d, m):
    """Controller parameters as a dict; enforced bounds are chosen at run time."""
    if not isinstance(d, dict):
        raise ConfigError("controller section must be an object")
    beta = np.asarray(_require(d, "beta", "controller"), dtype=float)
    if beta.shape != (m,):
        raise ConfigError(f"controller beta must have {m} entries, got {beta.shape}")
    if abs(float(beta.sum()) - 1.0) > 1e-9:
        raise ConfigError(f"controller beta must sum to 1, got {beta.sum()}")
    return dict(frequency_bias=float(_require(d, "frequency_bias", "controller")),
                K_P=float(_require(d, "K_P", "controller")),
                K_I=float(_require(d, "K_I", "controller")),
                beta=beta)


def parse_unsafe(d, n_states) -> UnsafeSet:
    """Either an explicit half-space list or the frequency_limit shorthand."""
    if isinstance(d, dict) and "frequency_limit" in d:
        limit = d["frequency_limit"]
        if not (isinstance(limit, (int, float)) and limit > 0):
            raise ConfigError(f"frequency_limit must be positive, got {limit!r}")
        return UnsafeSet.frequency_limit(n_states, float(limit))
    if isinstance(d, list):
        try:
            halfspaces = tuple(HalfSpace(np.asarray(h["c"], dtype=float), float(h["g"]))
                               for h in d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"unsafe section: {exc}")
        for h in halfspaces:
            if h.c.shape != (n_states,):
                raise ConfigError(
                    f"unsafe hyperplane normal must have {n_states} entries, got {h.c.shape}")
        try:
            return UnsafeSet(halfspaces)
        except ValueError as exc:
            raise ConfigError(f"unsafe section: {exc}")
    raise ConfigError("unsafe section must be a half-space list or {'frequency_limit': ...}")


def parse_a_grid(raw) -> tuple:
    """'start:step:end' inclusive, or an explicit list of values."""
    if raw is None:
        return DEFAULT_A_GRID
    if isinstance(raw, (list, tuple)):
        values = tuple(float(v) for v in raw)
    else:
        try:
            start, step, end = (float(v) for v in str(raw).split(":"))
        except ValueError:
            raise ConfigError(f"a-grid must be 'start:step:end', got {raw!r}")
        if step <= 0:
            raise ConfigError("a-grid step must be positive")
        values = tuple(np.round(np.arange(start, end + step / 2, step), 12))
    if len(values) == 0 or any(not (0.0 < v < 1.0) for v in values):
        raise ConfigError("a-grid values must lie strictly in (0,1)")
    return values


KNOWN_ATTACKS = ("random", "optimal-setpoint", "optimal-sensor")


@dataclass(frozen=True)
class ScenarioConfig:
    params: PowerSystemParams
    tau: float
    controller: dict
    unsafe: UnsafeSet
    a_grid: tuple
    attacks: tuple
    horizon_seconds: float
    attack_horizon: int
    dwell_steps: int
    initial_frequency_deviation: float
    seed: int


def parse_scenario(d, base_dir=".") -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ConfigError("scenario config must be a JSON object")
    model_section = _require(d, "model", "scenario")
    if isinstance(model_section, str):
        model_section = load_json(Path(base_dir) / model_section)
    params, tau = parse_model(model_section)
    ctrl = parse_controller(_require(d, "controller", "scenario"), params.n_units)
    unsafe = parse_unsafe(_require(d, "unsafe", "scenario"), params.n_states)
    a_grid = parse_a_grid(d.get("synthesis", {}).get("a_grid"))
    attacks = tuple(d.get("attacks", list(KNOWN_ATTACKS)))
    for name in attacks:
        if name not in KNOWN_ATTACKS:
            raise ConfigError(f"unknown attack '{name}', expected one of {KNOWN_ATTACKS}")
    sim = d.get("simulation", {})
    seed = d.get("seed", sim.get("seed", 0))
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    return ScenarioConfig(
        params=params, tau=tau, controller=ctrl, unsafe=unsafe, a_grid=a_grid,
        attacks=attacks,
        horizon_seconds=float(sim.get("horizon_seconds", 900.0)),
        attack_horizon=int(sim.get("attack_horizon", 50)),
        dwell_steps=int(sim.get("dwell_steps", 15)),
        initial_frequency_deviation=float(sim.get("initial_frequency_deviation", 0.1)),
        seed=seed)

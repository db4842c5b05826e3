"""End-to-end scenario runner.

Wires model build, constraint synthesis, certificate verification, attack
synthesis, and closed loop simulation into one reproducible pass, and writes
every artifact (result.json, attack files, trajectory CSVs, SVG figures,
report.json) into an output directory.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import plots
from .attacks import (AttackScenario, optimal_sensor_attack,
                      optimal_setpoint_attack, random_setpoint_attack)
from .config import ScenarioConfig
from .control import AgcController, DisturbanceModel, simulate_discrete
from .model import build_continuous, discretize
from .reachability import Bounds, sample_reachable
from .synthesis import (InfeasibleSynthesisError, SynthesisProblem,
                        analysis_ellipsoid, synthesize, verify_certificate)

CSV_FLOAT = "%.17g"


@dataclass
class RunReport:
    """Outcome of one pipeline pass; stage markers plus headline numbers."""

    out_dir: str
    stages: dict = field(default_factory=dict)
    gamma_hat: np.ndarray | None = None
    a: float | None = None
    objective: float | None = None
    certificate_passed: bool | None = None
    attack_table: dict = field(default_factory=dict)
    saturation_steps: int | None = None
    files: list = field(default_factory=list)

    @property
    def ok(self):
        return all(not v.startswith("failed") for v in self.stages.values())


def trajectory_to_csv(traj, path):
    """Pinned column layout; stable float formatting so reruns are
    byte-identical."""
    states = np.asarray(traj.states)
    n = states.shape[1]
    m = np.asarray(traj.u).shape[1]
    cols = (["t"] + [f"x{i + 1}" for i in range(n)]
            + [f"u{j + 1}" for j in range(m)]
            + [f"u_raw{j + 1}" for j in range(m)]
            + ["omega", "attack_signal"]
            + [f"sat{j + 1}" for j in range(m)])
    times = np.asarray(traj.controller_times if traj.controller_times is not None
                       else traj.times)
    if traj.controller_times is not None:
        # continuous run: log rows at controller instants only
        stride = (states.shape[0] - 1) // (len(times) - 1)
        states = states[::stride]
    K = np.asarray(traj.u).shape[0]
    lines = [",".join(cols)]
    for k in range(states.shape[0]):
        row = [CSV_FLOAT % times[k]]
        row += [CSV_FLOAT % v for v in states[k]]
        if k < K:
            row += [CSV_FLOAT % v for v in traj.u[k]]
            row += [CSV_FLOAT % v for v in traj.u_raw[k]]
            row += [CSV_FLOAT % traj.omega[k], CSV_FLOAT % traj.attack_signal[k]]
            row += ["%d" % int(f) for f in traj.sat_flags[k]]
        else:
            row += [""] * (2 * m + 2) + [""] * m
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def result_to_json(result, path):
    payload = {
        "W": [list(map(float, row)) for row in result.W],
        "gamma_hat": list(map(float, result.gamma_hat)),
        "a": float(result.a),
        "objective": float(result.objective),
        "per_a_status": [{"a": float(a), "status": s}
                         for a, s in result.per_a_status],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def attack_to_json(scenario: AttackScenario, path):
    # signal is always an array of per-step arrays, scalar sensor injections
    # included, so one schema covers both attack families
    sig = np.asarray(scenario.signal)
    if sig.ndim == 1:
        sig = sig.reshape(-1, 1)
    payload = {
        "type": scenario.kind,
        "horizon": int(scenario.horizon),
        "signal": [list(map(float, row)) for row in sig],
        "achieved_deviation": None if scenario.achieved is None
                              else float(scenario.achieved),
    }
    if scenario.direction is not None:
        payload["direction"] = scenario.direction
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _max_abs_freq(traj):
    return float(np.max(np.abs(traj.frequency)))


def _random_attack_sweep(model, ctrl, bounds, dist_model, K, x0, seeds):
    """Max |df| over a batch of random setpoint attacks with ambient load
    noise; mirrors a Monte Carlo robustness sweep."""
    worst = 0.0
    worst_seed = seeds[0]
    for s in seeds:
        attack = random_setpoint_attack(bounds, K, seed=s)
        dist = DisturbanceModel(bound=dist_model.bound,
                                dwell_steps=dist_model.dwell_steps, seed=s)
        traj = simulate_discrete(model, ctrl, dist, K, x0=x0, attack=attack)
        dev = _max_abs_freq(traj)
        if dev > worst:
            worst, worst_seed = dev, s
    return worst, worst_seed


def run_scenario(config: ScenarioConfig, out_dir, solver="CLARABEL",
                 random_attack_runs=200) -> RunReport:
    os.makedirs(out_dir, exist_ok=True)
    report = RunReport(out_dir=out_dir)

    def emit(path):
        report.files.append(os.path.basename(path))
        return path

    # -- build
    try:
        cont = build_continuous(config.params)
        model = discretize(cont, config.tau)
        report.stages["build"] = "ok"
    except Exception as exc:
        report.stages["build"] = f"failed: {exc}"
        _write_report(report)
        return report

    physical = Bounds(gamma=config.params.unit_bounds,
                      gamma_omega=config.params.disturbance_bound)
    ctrl_kw = config.controller

    # -- synthesize
    result = None
    try:
        problem = SynthesisProblem(model=model, bounds=physical,
                                   unsafe=config.unsafe, a_grid=config.a_grid)
        result = synthesize(problem, solver=solver)
        report.gamma_hat = result.gamma_hat
        report.a = result.a
        report.objective = result.objective
        result_to_json(result, emit(os.path.join(out_dir, "result.json")))
        report.stages["synthesize"] = "ok"
    except InfeasibleSynthesisError as exc:
        report.stages["synthesize"] = f"failed: {exc}"
    except Exception as exc:  # solver backends can raise almost anything
        report.stages["synthesize"] = f"failed: {exc}"

    # -- verify
    if result is not None:
        try:
            cert = verify_certificate(model, result, config.unsafe, physical,
                                      seed=config.seed)
            report.certificate_passed = cert.passed
            cert_payload = [{"name": c.name, "residual": float(c.residual),
                             "passed": bool(c.passed)} for c in cert.checks]
            with open(emit(os.path.join(out_dir, "certificate.json")), "w") as fh:
                json.dump({"passed": cert.passed, "checks": cert_payload},
                          fh, indent=2)
                fh.write("\n")
            report.stages["verify"] = "ok" if cert.passed else "failed: checks"
        except Exception as exc:
            report.stages["verify"] = f"failed: {exc}"
    else:
        report.stages["verify"] = "skipped"

    # -- attacks (defended vs undefended comparison table)
    if result is not None and config.attacks:
        defended = Bounds(gamma=result.gamma_hat,
                          gamma_omega=physical.gamma_omega)
        x0 = np.zeros(model.n)
        x0[0] = config.initial_frequency_deviation
        N = config.attack_horizon
        try:
            table = {}
            for name in config.attacks:
                row = {}
                for label, bnd in (("undefended", physical),
                                   ("defended", defended)):
                    ctrl = AgcController(enforced_bounds=np.asarray(bnd.gamma),
                                         **ctrl_kw)
                    if name == "random":
                        dist = DisturbanceModel(bound=physical.gamma_omega,
                                                dwell_steps=config.dwell_steps,
                                                seed=config.seed)
                        seeds = list(range(config.seed,
                                           config.seed + random_attack_runs))
                        dev, seed = _random_attack_sweep(
                            model, ctrl, bnd, dist, N, x0, seeds)
                        row[label] = dev
                        if label == "defended":
                            attack = random_setpoint_attack(bnd, N, seed=seed)
                            attack_to_json(attack, emit(os.path.join(
                                out_dir, "attack_random.json")))
                    elif name == "optimal-setpoint":
                        attack = optimal_setpoint_attack(
                            model, bnd, N, direction="minimize", x0=x0)
                        row[label] = abs(attack.achieved)
                        if label == "defended":
                            attack_to_json(attack, emit(os.path.join(
                                out_dir, "attack_optimal_setpoint.json")))
                        ctrl.reset()
                        traj = simulate_discrete(
                            model, ctrl, None, N, x0=x0, attack=attack)
                        trajectory_to_csv(traj, emit(os.path.join(
                            out_dir, f"traj_setpoint_{label}.csv")))
                    elif name == "optimal-sensor":
                        ctrl.reset()
                        attack = optimal_sensor_attack(
                            model, ctrl, bnd, N, direction="minimize", x0=x0)
                        row[label] = abs(attack.achieved)
                        if label == "defended":
                            attack_to_json(attack, emit(os.path.join(
                                out_dir, "attack_optimal_sensor.json")))
                    else:
                        raise ValueError(f"unknown attack kind: {name}")
                table[name] = row
            report.attack_table = table
            report.stages["attack"] = "ok"
        except Exception as exc:
            report.stages["attack"] = f"failed: {exc}"
    else:
        report.stages["attack"] = "skipped"

    # -- simulate (normal operation under the synthesized constraints)
    if result is not None:
        try:
            defended = Bounds(gamma=result.gamma_hat,
                              gamma_omega=physical.gamma_omega)
            ctrl = AgcController(enforced_bounds=result.gamma_hat, **ctrl_kw)
            dist = DisturbanceModel(bound=physical.gamma_omega,
                                    dwell_steps=config.dwell_steps,
                                    seed=config.seed)
            K = int(round(config.horizon_seconds / model.tau))
            x0 = np.zeros(model.n)
            x0[0] = config.initial_frequency_deviation
            traj = simulate_discrete(model, ctrl, dist, K, x0=x0)
            report.saturation_steps = traj.saturation_count
            trajectory_to_csv(traj, emit(os.path.join(out_dir, "traj_normal.csv")))
            report.stages["simulate"] = "ok"
        except Exception as exc:
            traj = None
            report.stages["simulate"] = f"failed: {exc}"
    else:
        traj = None
        report.stages["simulate"] = "skipped"

    # -- report (figures + summary)
    try:
        limit = _frequency_limit(config.unsafe)
        if traj is not None:
            plots.plot_frequency(traj, emit(os.path.join(
                out_dir, "frequency_normal.svg")),
                title="normal operation under synthesized constraints",
                limit=limit)
            plots.plot_setpoints(traj, emit(os.path.join(
                out_dir, "setpoints_normal.svg")))
        if result is not None:
            defended = Bounds(gamma=result.gamma_hat,
                              gamma_omega=physical.gamma_omega)
            pts = sample_reachable(model, defended, horizon=200, trials=200,
                                   seed=config.seed)
            plots.plot_projection(
                result.W, emit(os.path.join(out_dir, "reachable_defended.svg")),
                points=pts, unsafe=config.unsafe,
                title="reachable states, synthesized constraints")
            try:
                undef = analysis_ellipsoid(model, physical,
                                           a_grid=config.a_grid, solver=solver)
                pts_u = sample_reachable(model, physical, horizon=200,
                                         trials=200, seed=config.seed)
                plots.plot_projection(
                    undef.W, emit(os.path.join(
                        out_dir, "reachable_undefended.svg")),
                    points=pts_u, unsafe=config.unsafe,
                    title="reachable states, physical capability only")
            except InfeasibleSynthesisError:
                pass
        report.stages["report"] = "ok"
    except Exception as exc:
        report.stages["report"] = f"failed: {exc}"

    _write_report(report)
    return report


def _frequency_limit(unsafe):
    for h in unsafe.halfspaces:
        support = np.nonzero(h.c)[0]
        if len(support) == 1 and support[0] == 0:
            return abs(h.g / h.c[0])
    return None


def _write_report(report: RunReport):
    payload = {
        "stages": report.stages,
        "gamma_hat": None if report.gamma_hat is None
                     else list(map(float, report.gamma_hat)),
        "a": report.a,
        "objective": report.objective,
        "certificate_passed": report.certificate_passed,
        "attack_table": report.attack_table,
        "saturation_steps": report.saturation_steps,
        "files": report.files,
    }
    path = os.path.join(report.out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if os.path.basename(path) not in report.files:
        report.files.append(os.path.basename(path))
    return path

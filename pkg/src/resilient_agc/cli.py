"""Command line front end.

Exit codes: 0 success, 2 synthesis infeasible, 3 certificate verification
failure, 4 configuration error.
"""

import argparse
import json
import sys

import numpy as np

from .attacks import (AttackScenario, optimal_sensor_attack,
                      optimal_setpoint_attack, random_setpoint_attack)
from .config import (ConfigError, load_json, parse_a_grid, parse_controller,
                     parse_model, parse_scenario, parse_unsafe)
from .control import AgcController, DisturbanceModel, simulate_continuous, \
    simulate_discrete
from .model import build_continuous, discretize
from .pipeline import (attack_to_json, result_to_json, run_scenario,
                       trajectory_to_csv)
from .reachability import Bounds
from .synthesis import (InfeasibleSynthesisError, ResilientResult,
                        SynthesisProblem, check_schur_stability, synthesize,
                        verify_certificate)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_VERIFY_FAILED = 3
EXIT_CONFIG = 4


def _load_setup(args):
    """Accept either a scenario file (model + controller + ...) or a bare
    model file, via --model or --config."""
    path = getattr(args, "model", None) or args.config
    if path is None:
        raise ConfigError("pass --model or --config")
    data = load_json(path)
    if "model" in data:
        return parse_scenario(data, base_dir=_dirname(path))
    params, tau = parse_model(data)
    return params, tau


def _dirname(path):
    import os
    return os.path.dirname(os.path.abspath(path))


def _model_from(cfg):
    if hasattr(cfg, "params"):
        params, tau = cfg.params, cfg.tau
    else:
        params, tau = cfg
    cont = build_continuous(params)
    return params, tau, cont, discretize(cont, tau)


def _unsafe_from(arg, cfg, n_states):
    """--unsafe accepts a JSON file or the shorthand frequency_limit:<x>."""
    if arg is None:
        if hasattr(cfg, "unsafe"):
            return cfg.unsafe
        raise ConfigError("no unsafe set: pass --unsafe or use a scenario "
                          "config that defines one")
    if arg.startswith("frequency_limit:"):
        return parse_unsafe({"frequency_limit": float(arg.split(":", 1)[1])},
                            n_states)
    return parse_unsafe(load_json(arg), n_states)


def _result_from_json(path):
    data = load_json(path)
    try:
        W = np.asarray(data["W"], dtype=float)
        gamma_hat = np.asarray(data["gamma_hat"], dtype=float)
        per_a = tuple((e["a"], e["status"]) for e in data.get("per_a_status", []))
        return ResilientResult(W=W, gamma_hat=gamma_hat, r=gamma_hat ** 2,
                               a=float(data["a"]),
                               objective=float(data["objective"]),
                               per_a_status=per_a)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed result file {path}: {exc}") from exc


def _bounds_from(arg, params):
    """--bounds physical | resilient:<result.json>; defended runs derive
    bounds from a synthesis result.  A bare path is read as resilient."""
    if arg in (None, "physical"):
        return Bounds(gamma=params.unit_bounds,
                      gamma_omega=params.disturbance_bound)
    path = arg.split(":", 1)[1] if arg.startswith("resilient:") else arg
    result = _result_from_json(path)
    return Bounds(gamma=result.gamma_hat, gamma_omega=params.disturbance_bound)


def _attack_from_json(path):
    data = load_json(path)
    try:
        kind = {"setpoint": "setpoint", "sensor": "sensor",
                "random": "setpoint", "optimal-setpoint": "setpoint",
                "optimal-sensor": "sensor"}[data["type"]]
        signal = np.asarray(data["signal"], dtype=float)
        if kind == "sensor":
            signal = signal.ravel()
        return AttackScenario(kind=kind, signal=signal,
                              horizon=int(data["horizon"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed attack file {path}: {exc}") from exc


def _controller_from(args, cfg, bounds, m):
    """--controller file wins; otherwise the scenario config must carry a
    controller section."""
    if getattr(args, "controller", None):
        data = load_json(args.controller)
        kw = parse_controller(data.get("controller", data), m)
    elif hasattr(cfg, "controller"):
        kw = cfg.controller
    else:
        raise ConfigError("pass --controller or use a scenario config with "
                          "a 'controller' section")
    return AgcController(enforced_bounds=np.asarray(bounds.gamma), **kw)


def cmd_build(args):
    cfg = _load_setup(args)
    params, tau, cont, model = _model_from(cfg)
    stable, rho = check_schur_stability(model.A)
    print(f"states n={model.n}  inputs m={model.m}  tau={tau}")
    print(f"spectral radius of A: {rho:.6f} ({'stable' if stable else 'NOT stable'})")
    if args.out:
        payload = {
            "tau": tau,
            "A": [list(map(float, r)) for r in model.A],
            "B": [list(map(float, r)) for r in model.B],
            "H": [list(map(float, r)) for r in model.H],
            "state_labels": list(cont.state_labels),
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_synthesize(args):
    cfg = _load_setup(args)
    params, tau, cont, model = _model_from(cfg)
    unsafe = _unsafe_from(args.unsafe, cfg, model.n)
    grid = parse_a_grid(args.a_grid) if args.a_grid else (
        cfg.a_grid if hasattr(cfg, "a_grid") else parse_a_grid(None))
    bounds = Bounds(gamma=params.unit_bounds,
                    gamma_omega=params.disturbance_bound)
    problem = SynthesisProblem(model=model, bounds=bounds, unsafe=unsafe,
                               a_grid=grid)
    try:
        result = synthesize(problem, solver=args.solver)
    except InfeasibleSynthesisError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    np.set_printoptions(precision=6, suppress=True)
    print(f"a = {result.a:g}  objective = {result.objective:.6f}")
    print(f"gamma_hat = {np.array2string(result.gamma_hat, precision=6)}")
    result_to_json(result, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_setup(args)
    params, tau, cont, model = _model_from(cfg)
    unsafe = _unsafe_from(args.unsafe, cfg, model.n)
    result = _result_from_json(args.result)
    bounds = Bounds(gamma=params.unit_bounds,
                    gamma_omega=params.disturbance_bound)
    report = verify_certificate(model, result, unsafe, bounds,
                                trajectories=args.trajectories,
                                steps=args.steps, seed=args.seed)
    for chk in report.checks:
        mark = "pass" if chk.passed else "FAIL"
        print(f"[{mark}] {chk.name} (residual {chk.residual:.3e})")
    if not report.passed:
        return EXIT_VERIFY_FAILED
    print("certificate verified")
    return EXIT_OK


def cmd_attack(args):
    cfg = _load_setup(args)
    params, tau, cont, model = _model_from(cfg)
    bounds = _bounds_from(args.bounds, params)
    x0 = np.zeros(model.n)
    x0[0] = args.x0_freq
    if args.type == "random":
        scenario = random_setpoint_attack(bounds, args.horizon, seed=args.seed)
    elif args.type == "optimal-setpoint":
        scenario = optimal_setpoint_attack(model, bounds, args.horizon,
                                           direction=args.direction, x0=x0)
    elif args.type == "optimal-sensor":
        ctrl = _controller_from(args, cfg, bounds, model.m)
        scenario = optimal_sensor_attack(model, ctrl, bounds, args.horizon,
                                         direction=args.direction, x0=x0)
    else:
        raise ConfigError(f"unknown attack type {args.type!r}")
    if scenario.achieved is not None:
        print(f"achieved frequency deviation at step {args.horizon}: "
              f"{scenario.achieved:.6f}")
    attack_to_json(scenario, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate(args):
    cfg = _load_setup(args)
    params, tau, cont, model = _model_from(cfg)
    bounds = _bounds_from(args.bounds, params)
    ctrl = _controller_from(args, cfg, bounds, model.m)
    attack = None if args.attack in (None, "none") else _attack_from_json(args.attack)
    dist = None
    if params.disturbance_bound > 0 and not args.no_disturbance:
        dist = DisturbanceModel(bound=params.disturbance_bound,
                                dwell_steps=getattr(cfg, "dwell_steps", 15),
                                seed=args.seed)
    x0 = np.zeros(model.n)
    x0[0] = args.x0_freq
    if args.mode == "discrete":
        K = int(round(args.horizon / tau))
        traj = simulate_discrete(model, ctrl, dist, K, x0=x0, attack=attack)
    else:
        traj = simulate_continuous(cont, ctrl, tau, args.horizon, args.dt,
                                   dist=dist, x0=x0, attack=attack)
    trajectory_to_csv(traj, args.out)
    peak = float(np.max(np.abs(traj.frequency)))
    print(f"peak |df| = {peak:.6f}  saturated steps = {traj.saturation_count}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_report(args):
    import os
    path = os.path.join(args.out_dir, "report.json")
    if not os.path.exists(path):
        raise ConfigError(f"no report.json under {args.out_dir}; run the "
                          f"'run' subcommand first")
    data = load_json(path)
    print("stage status:")
    for stage, status in data.get("stages", {}).items():
        print(f"  {stage:<12} {status}")
    if data.get("gamma_hat") is not None:
        gh = ", ".join(f"{v:.4f}" for v in data["gamma_hat"])
        print(f"constraints gamma_hat = [{gh}]  (a = {data['a']}, "
              f"objective = {data['objective']:.6f})")
    if data.get("certificate_passed") is not None:
        print(f"certificate verified: {data['certificate_passed']}")
    table = data.get("attack_table") or {}
    if table:
        print("worst frequency deviation by attack:")
        print(f"  {'attack':<18} {'undefended':>12} {'defended':>12}")
        for name, row in table.items():
            und = row.get("undefended")
            def_ = row.get("defended")
            print(f"  {name:<18} {und:>12.4f} {def_:>12.4f}")
    if data.get("saturation_steps") is not None:
        print(f"saturated steps in normal run: {data['saturation_steps']}")
    return EXIT_OK


def cmd_run(args):
    cfg = _load_setup(args)
    if not hasattr(cfg, "controller"):
        raise ConfigError("'run' needs a full scenario config")
    report = run_scenario(cfg, args.out_dir, solver=args.solver)
    for stage, status in report.stages.items():
        print(f"  {stage:<12} {status}")
    if report.ok:
        print(f"all stages complete; artifacts in {args.out_dir}")
        return EXIT_OK
    if report.stages.get("synthesize", "").startswith("failed"):
        return EXIT_INFEASIBLE
    if report.stages.get("verify", "").startswith("failed"):
        return EXIT_VERIFY_FAILED
    return 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="resilient-agc",
        description="Synthesize, certify, and stress-test resilient operating "
                    "constraints for frequency regulation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, model_flag=False, controller_flag=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", help="model or scenario JSON file")
        if model_flag:
            sp.add_argument("--model", help="model JSON (alias for --config)")
        if controller_flag:
            sp.add_argument("--controller",
                            help="controller JSON; defaults to the scenario's "
                                 "controller section")
        return sp

    sp = add("build", cmd_build, "assemble and discretize the system model")
    sp.add_argument("--out", help="write the discrete matrices to this JSON file")

    sp = add("synthesize", cmd_synthesize, "solve for resilient constraints",
             model_flag=True)
    sp.add_argument("--unsafe", help="unsafe set JSON or frequency_limit:<x>")
    sp.add_argument("--a-grid", help="contraction grid start:step:end")
    sp.add_argument("--solver", default="CLARABEL")
    sp.add_argument("--out", default="result.json")

    sp = add("verify", cmd_verify, "re-check a synthesized certificate",
             model_flag=True)
    sp.add_argument("--result", required=True)
    sp.add_argument("--unsafe", help="unsafe set JSON or frequency_limit:<x>")
    sp.add_argument("--trajectories", type=int, default=1000)
    sp.add_argument("--steps", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("attack", cmd_attack, "synthesize a worst-case attack sequence",
             model_flag=True, controller_flag=True)
    sp.add_argument("--type", required=True,
                    choices=["random", "optimal-setpoint", "optimal-sensor"])
    sp.add_argument("--horizon", type=int, default=50)
    sp.add_argument("--direction", default="minimize",
                    choices=["minimize", "maximize", "min", "max"])
    sp.add_argument("--bounds", default="physical",
                    help="'physical' or path to a synthesis result.json")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--x0-freq", type=float, default=0.0,
                    help="initial frequency deviation")
    sp.add_argument("--out", default="attack.json")

    sp = add("simulate", cmd_simulate, "run the closed loop",
             model_flag=True, controller_flag=True)
    sp.add_argument("--bounds", default="physical")
    sp.add_argument("--mode", default="discrete",
                    choices=["discrete", "continuous"])
    sp.add_argument("--horizon", type=float, default=900.0,
                    help="simulated seconds")
    sp.add_argument("--dt", type=float, default=0.01,
                    help="integrator step for continuous mode")
    sp.add_argument("--attack", help="attack JSON produced by the attack command")
    sp.add_argument("--no-disturbance", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--x0-freq", type=float, default=0.0)
    sp.add_argument("--out", default="traj.csv")

    sp = add("report", cmd_report, "summarize a finished run directory")
    sp.add_argument("--out-dir", required=True)

    sp = add("run", cmd_run, "full pipeline: build through report")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--solver", default="CLARABEL")

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSynthesisError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

import json
import os

import numpy as np
import pytest

import resilient_agc as ra
from resilient_agc import cli
from resilient_agc.config import (ConfigError, load_json, parse_a_grid,
                                  parse_controller, parse_model,
                                  parse_scenario, parse_unsafe)

MODEL_SECTION = {
    "inertia": 5.0,
    "damping": 3.0,
    "tau": 2.0,
    "disturbance_bound": 0.2,
    "generators": [
        {"T_t": 3.0, "T_g": 0.8, "R": 1.5, "gamma": 0.5},
        {"T_t": 0.5, "T_g": 0.12, "R": 0.5, "gamma": 0.5},
    ],
    "storages": [
        {"T_ES": 0.1, "gamma": 0.2},
        {"T_ES": 0.1, "gamma": 0.15},
    ],
}

CONTROLLER_SECTION = {"frequency_bias": 10.0, "K_P": 0.1, "K_I": 10.0,
                      "beta": [0.3, 0.4, 0.2, 0.1]}


def scenario_dict(**overrides):
    d = {
        "model": dict(MODEL_SECTION),
        "controller": dict(CONTROLLER_SECTION),
        "unsafe": {"frequency_limit": 0.2},
        "synthesis": {"a_grid": "0.3:0.02:0.4"},
        "attacks": ["optimal-setpoint"],
        "simulation": {"horizon_seconds": 100.0, "attack_horizon": 50,
                       "dwell_steps": 15, "initial_frequency_deviation": 0.1,
                       "seed": 0},
    }
    d.update(overrides)
    return d


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh)
    return str(path)


# ---------------------------------------------------------------- parsing


def test_parse_model_round_trip():
    params, tau = parse_model(MODEL_SECTION)
    assert tau == 2.0
    assert params.n_states == 7
    assert params.n_units == 4
    assert np.array_equal(params.unit_bounds, [0.5, 0.5, 0.2, 0.15])


def test_parse_model_reports_the_missing_key():
    broken = {k: v for k, v in MODEL_SECTION.items() if k != "inertia"}
    with pytest.raises(ConfigError, match="inertia"):
        parse_model(broken)
    with pytest.raises(ConfigError, match="tau"):
        parse_model({**MODEL_SECTION, "tau": -2.0})
    with pytest.raises(ConfigError):
        parse_model([1, 2, 3])


def test_parse_controller_checks_beta(model):
    kw = parse_controller(CONTROLLER_SECTION, 4)
    assert kw["frequency_bias"] == 10.0
    assert np.array_equal(kw["beta"], [0.3, 0.4, 0.2, 0.1])
    with pytest.raises(ConfigError, match="sum to 1"):
        parse_controller({**CONTROLLER_SECTION, "beta": [0.3, 0.3, 0.2, 0.1]}, 4)
    with pytest.raises(ConfigError, match="4 entries"):
        parse_controller({**CONTROLLER_SECTION, "beta": [0.5, 0.5]}, 4)
    with pytest.raises(ConfigError, match="K_I"):
        parse_controller({k: v for k, v in CONTROLLER_SECTION.items()
                          if k != "K_I"}, 4)


def test_parse_unsafe_variants():
    u = parse_unsafe({"frequency_limit": 0.2}, 7)
    assert len(u.halfspaces) == 2
    explicit = parse_unsafe([{"c": [1, 0, 0], "g": 0.5},
                             {"c": [0, 1, 0], "g": 1.0}], 3)
    assert len(explicit.halfspaces) == 2
    with pytest.raises(ConfigError, match="positive"):
        parse_unsafe({"frequency_limit": -0.2}, 7)
    with pytest.raises(ConfigError, match="7 entries"):
        parse_unsafe([{"c": [1, 0], "g": 0.5}], 7)
    with pytest.raises(ConfigError):
        parse_unsafe("nonsense", 7)


def test_parse_a_grid_forms():
    assert parse_a_grid("0.3:0.1:0.5") == pytest.approx((0.3, 0.4, 0.5))
    assert parse_a_grid([0.2, 0.5]) == (0.2, 0.5)
    default = parse_a_grid(None)
    assert len(default) == 49
    assert default[0] == pytest.approx(0.02)
    assert default[-1] == pytest.approx(0.98)
    with pytest.raises(ConfigError, match="start:step:end"):
        parse_a_grid("abc")
    with pytest.raises(ConfigError, match="positive"):
        parse_a_grid("0.5:-0.1:0.3")
    with pytest.raises(ConfigError, match="0,1"):
        parse_a_grid("0.5:0.5:1.5")


def test_parse_scenario_inline_and_by_reference(tmp_path):
    cfg = parse_scenario(scenario_dict())
    assert cfg.tau == 2.0
    assert cfg.attacks == ("optimal-setpoint",)
    assert cfg.a_grid == pytest.approx(tuple(np.arange(0.3, 0.41, 0.02)))
    assert cfg.horizon_seconds == 100.0
    assert cfg.seed == 0

    write_json(tmp_path / "m.json", MODEL_SECTION)
    by_ref = parse_scenario(scenario_dict(model="m.json"),
                            base_dir=str(tmp_path))
    assert by_ref.params.n_states == 7

    with pytest.raises(ConfigError, match="unknown attack"):
        parse_scenario(scenario_dict(attacks=["ddos"]))
    with pytest.raises(ConfigError, match="seed"):
        parse_scenario(scenario_dict(seed="zero"))


def test_load_json_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_json(bad)


# ---------------------------------------------------------------- CLI


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Model file, scenario file, and a synthesized result shared by the
    CLI tests; building the result once keeps the suite fast."""
    root = tmp_path_factory.mktemp("cli")
    model_path = write_json(root / "model.json", MODEL_SECTION)
    scenario_path = write_json(root / "scenario.json", scenario_dict())
    result_path = str(root / "result.json")
    rc = cli.main(["synthesize", "--model", model_path,
                   "--unsafe", "frequency_limit:0.2",
                   "--a-grid", "0.3:0.02:0.4", "--out", result_path])
    assert rc == 0
    return {"root": root, "model": model_path, "scenario": scenario_path,
            "result": result_path}


def test_cli_build_writes_discrete_matrices(workdir, model):
    out = str(workdir["root"] / "matrices.json")
    rc = cli.main(["build", "--config", workdir["model"], "--out", out])
    assert rc == 0
    data = load_json(out)
    assert np.allclose(np.asarray(data["A"]), model.A)
    assert np.allclose(np.asarray(data["B"]), model.B)
    assert np.allclose(np.asarray(data["H"]), model.H)
    assert data["tau"] == 2.0
    assert data["state_labels"][0] == "df"


def test_cli_synthesize_result_content(workdir, result):
    data = load_json(workdir["result"])
    assert set(data) == {"W", "gamma_hat", "a", "objective", "per_a_status"}
    assert data["a"] == pytest.approx(0.34)
    assert data["objective"] == pytest.approx(result.objective, abs=2e-4)
    assert np.asarray(data["W"]).shape == (7, 7)
    assert len(data["per_a_status"]) == 6
    assert all(set(e) == {"a", "status"} for e in data["per_a_status"])


def test_cli_exit_codes_for_bad_input(workdir, tmp_path, capsys):
    assert cli.main(["synthesize", "--model", str(tmp_path / "nope.json"),
                     "--unsafe", "frequency_limit:0.2"]) == 4
    bad = tmp_path / "broken.json"
    bad.write_text("{]")
    assert cli.main(["synthesize", "--model", str(bad),
                     "--unsafe", "frequency_limit:0.2"]) == 4
    assert cli.main(["synthesize", "--unsafe", "frequency_limit:0.2"]) == 4
    assert cli.main(["synthesize", "--model", workdir["model"]]) == 4
    capsys.readouterr()


def test_cli_synthesize_infeasible_exit(workdir, tmp_path, capsys):
    rc = cli.main(["synthesize", "--model", workdir["model"],
                   "--unsafe", "frequency_limit:0.00001",
                   "--a-grid", "0.3:0.05:0.4",
                   "--out", str(tmp_path / "r.json")])
    assert rc == 2
    assert "infeasible" in capsys.readouterr().err


def test_cli_verify_accepts_then_rejects_tampered(workdir, tmp_path, capsys):
    rc = cli.main(["verify", "--model", workdir["model"],
                   "--result", workdir["result"],
                   "--unsafe", "frequency_limit:0.2",
                   "--trajectories", "50", "--steps", "100"])
    assert rc == 0
    assert "certificate verified" in capsys.readouterr().out

    data = load_json(workdir["result"])
    data["W"][0][0] += 0.1
    tampered = write_json(tmp_path / "tampered.json", data)
    rc = cli.main(["verify", "--model", workdir["model"], "--result", tampered,
                   "--unsafe", "frequency_limit:0.2",
                   "--trajectories", "20", "--steps", "50"])
    assert rc == 3
    assert "FAIL" in capsys.readouterr().out


def test_cli_attack_random_schema(workdir, capsys):
    out = str(workdir["root"] / "attack_random.json")
    rc = cli.main(["attack", "--model", workdir["model"], "--type", "random",
                   "--bounds", "physical", "--horizon", "50", "--seed", "7",
                   "--out", out])
    assert rc == 0
    data = load_json(out)
    assert set(data) == {"type", "horizon", "signal", "achieved_deviation"}
    assert data["type"] == "setpoint"
    assert data["horizon"] == 50
    sig = np.asarray(data["signal"])
    assert sig.shape == (50, 4)
    assert np.all(np.abs(sig) <= [0.5, 0.5, 0.2, 0.15])
    assert data["achieved_deviation"] is None
    capsys.readouterr()


def test_cli_attack_optimal_setpoint(workdir, capsys):
    out = str(workdir["root"] / "attack_sp.json")
    rc = cli.main(["attack", "--model", workdir["model"],
                   "--type", "optimal-setpoint", "--bounds", "physical",
                   "--horizon", "50", "--direction", "min", "--out", out])
    assert rc == 0
    data = load_json(out)
    assert data["achieved_deviation"] == pytest.approx(-0.263471, abs=1e-4)
    assert data["direction"] == "min"
    assert np.asarray(data["signal"]).shape == (50, 4)


def test_cli_attack_sensor_with_resilient_bounds(workdir, capsys):
    out = str(workdir["root"] / "attack_sensor.json")
    rc = cli.main(["attack", "--config", workdir["scenario"],
                   "--type", "optimal-sensor",
                   "--bounds", "resilient:" + workdir["result"],
                   "--horizon", "50", "--direction", "max", "--out", out])
    assert rc == 0
    data = load_json(out)
    assert data["type"] == "sensor"
    assert np.asarray(data["signal"]).shape == (50, 1)
    assert data["achieved_deviation"] == pytest.approx(0.076331, abs=1e-3)


def test_cli_simulate_csv_layout_and_determinism(workdir, capsys):
    out1 = str(workdir["root"] / "t1.csv")
    out2 = str(workdir["root"] / "t2.csv")
    argv = ["simulate", "--config", workdir["scenario"],
            "--bounds", "resilient:" + workdir["result"],
            "--horizon", "100", "--mode", "discrete", "--seed", "0"]
    assert cli.main(argv + ["--out", out1]) == 0
    assert cli.main(argv + ["--out", out2]) == 0
    with open(out1) as fh:
        lines = fh.read().splitlines()
    header = ("t,x1,x2,x3,x4,x5,x6,x7,u1,u2,u3,u4,"
              "u_raw1,u_raw2,u_raw3,u_raw4,omega,attack_signal,"
              "sat1,sat2,sat3,sat4")
    assert lines[0] == header
    assert len(lines) == 1 + 51  # header + K+1 state rows
    assert lines[-1].split(",")[9] == ""  # final row carries no input
    with open(out2) as fh:
        assert fh.read() == "\n".join(lines) + "\n"
    capsys.readouterr()


def test_cli_simulate_replays_attack_file(workdir, capsys):
    atk = str(workdir["root"] / "attack_sp.json")
    out = str(workdir["root"] / "t_attacked.csv")
    rc = cli.main(["simulate", "--config", workdir["scenario"],
                   "--bounds", "physical", "--horizon", "100",
                   "--attack", atk, "--no-disturbance", "--out", out])
    assert rc == 0
    freq = np.loadtxt(out, delimiter=",", skiprows=1, usecols=1)
    achieved = load_json(atk)["achieved_deviation"]
    # attack optimized df(50) from a 0.1 Hz offset; replay starts at 0
    rc2 = cli.main(["simulate", "--config", workdir["scenario"],
                    "--bounds", "physical", "--horizon", "100",
                    "--attack", atk, "--no-disturbance", "--x0-freq", "0.1",
                    "--out", out])
    assert rc2 == 0
    freq = np.loadtxt(out, delimiter=",", skiprows=1, usecols=1)
    assert freq[50] == pytest.approx(achieved, abs=1e-9)
    capsys.readouterr()


def test_cli_simulate_continuous_mode(workdir, capsys):
    out = str(workdir["root"] / "t_cont.csv")
    rc = cli.main(["simulate", "--config", workdir["scenario"],
                   "--bounds", "physical", "--horizon", "20",
                   "--mode", "continuous", "--dt", "0.01", "--out", out])
    assert rc == 0
    with open(out) as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 1 + 11  # rows at controller instants only
    assert float(lines[-1].split(",")[0]) == 20.0
    capsys.readouterr()


def test_cli_run_and_report(tmp_path, capsys):
    scenario = write_json(tmp_path / "scenario.json", scenario_dict(
        attacks=["random", "optimal-setpoint", "optimal-sensor"]))
    out_a = str(tmp_path / "out_a")
    out_b = str(tmp_path / "out_b")
    assert cli.main(["run", "--config", scenario, "--out-dir", out_a]) == 0
    assert cli.main(["run", "--config", scenario, "--out-dir", out_b]) == 0

    report = load_json(os.path.join(out_a, "report.json"))
    assert all(v == "ok" for v in report["stages"].values())
    assert report["certificate_passed"] is True
    assert report["gamma_hat"] == pytest.approx(
        [0.129763, 0.201720, 0.169179, 0.15], abs=2e-3)
    table = report["attack_table"]
    assert table["optimal-setpoint"]["defended"] < table["optimal-setpoint"]["undefended"]
    assert table["optimal-sensor"]["defended"] < table["optimal-sensor"]["undefended"]
    assert table["random"]["defended"] < table["random"]["undefended"]

    for name in ("result.json", "certificate.json", "attack_random.json",
                 "attack_optimal_setpoint.json", "attack_optimal_sensor.json",
                 "traj_setpoint_defended.csv", "traj_setpoint_undefended.csv",
                 "traj_normal.csv", "frequency_normal.svg",
                 "setpoints_normal.svg", "reachable_defended.svg",
                 "reachable_undefended.svg", "report.json"):
        assert os.path.exists(os.path.join(out_a, name)), name

    # bit-for-bit reproducibility of the main trajectory artifact
    with open(os.path.join(out_a, "traj_normal.csv"), "rb") as fh:
        bytes_a = fh.read()
    with open(os.path.join(out_b, "traj_normal.csv"), "rb") as fh:
        assert fh.read() == bytes_a

    assert cli.main(["report", "--out-dir", out_a]) == 0
    text = capsys.readouterr().out
    assert "gamma_hat" in text
    assert "defended" in text


def test_cli_run_without_attacks_skips_that_stage(tmp_path, capsys):
    scenario = write_json(tmp_path / "s.json", scenario_dict(attacks=[]))
    out = str(tmp_path / "out")
    assert cli.main(["run", "--config", scenario, "--out-dir", out]) == 0
    report = load_json(os.path.join(out, "report.json"))
    assert report["stages"]["attack"] == "skipped"
    assert report["stages"]["synthesize"] == "ok"
    assert report["attack_table"] == {}
    capsys.readouterr()


def test_cli_run_reports_structured_infeasibility(tmp_path, capsys):
    big = dict(MODEL_SECTION)
    big["disturbance_bound"] = 2.0
    scenario = write_json(tmp_path / "s.json", scenario_dict(model=big))
    out = str(tmp_path / "out")
    assert cli.main(["run", "--config", scenario, "--out-dir", out]) == 2
    report = load_json(os.path.join(out, "report.json"))
    assert report["stages"]["synthesize"].startswith("failed")
    assert "relax" in report["stages"]["synthesize"]
    assert report["stages"]["verify"] == "skipped"
    assert report["gamma_hat"] is None
    capsys.readouterr()


def test_cli_report_needs_a_run_directory(tmp_path, capsys):
    assert cli.main(["report", "--out-dir", str(tmp_path)]) == 4
    capsys.readouterr()

"""Resilient operating-constraint synthesis for frequency regulation.

Builds single-area power system models with turbine-governor and storage
units, synthesizes provably safe per-unit setpoint bounds via invariant
ellipsoid optimization, verifies the certificates independently, generates
worst-case setpoint and sensor attacks, and simulates the closed AGC loop.
"""

from .model import (ContinuousModel, DiscreteModel, GeneratorParams,
                    PowerSystemParams, StorageParams, build_continuous,
                    discretize, matrix_exponential)
from .reachability import (Bounds, Ellipsoid, HalfSpace, UnsafeSet,
                           check_separation, contains, hyperplane_distance,
                           sample_reachable)
from .synthesis import (CertificateReport, InfeasibleSynthesisError,
                        ResilientResult, SynthesisProblem, analysis_ellipsoid,
                        assemble_lmi, budget_channels, check_schur_stability,
                        solve_fixed_a, synthesize, verify_certificate)
from .control import (AgcController, DisturbanceModel, Trajectory, ace,
                      agc_step, generate_disturbance, simulate_continuous,
                      simulate_discrete)
from .attacks import (AttackScenario, closed_loop_augmented,
                      optimal_sensor_attack, optimal_setpoint_attack,
                      random_setpoint_attack, sensor_attack_oracle,
                      setpoint_attack_oracle)
from .config import (ConfigError, ScenarioConfig, load_json, parse_a_grid,
                     parse_controller, parse_model, parse_scenario,
                     parse_unsafe)
from .pipeline import RunReport, run_scenario, trajectory_to_csv

__version__ = "0.1.0"

__all__ = [
    "AgcController", "AttackScenario", "Bounds", "CertificateReport",
    "ConfigError", "ContinuousModel", "DiscreteModel", "DisturbanceModel",
    "Ellipsoid", "GeneratorParams", "HalfSpace", "InfeasibleSynthesisError",
    "PowerSystemParams", "ResilientResult", "RunReport", "ScenarioConfig",
    "StorageParams", "SynthesisProblem", "Trajectory", "UnsafeSet", "ace",
    "agc_step", "analysis_ellipsoid", "assemble_lmi", "budget_channels",
    "build_continuous", "check_schur_stability", "check_separation",
    "contains",
    "closed_loop_augmented", "discretize", "generate_disturbance",
    "hyperplane_distance", "load_json", "matrix_exponential",
    "optimal_sensor_attack", "optimal_setpoint_attack", "parse_a_grid",
    "parse_controller", "parse_model", "parse_scenario", "parse_unsafe",
    "random_setpoint_attack",
    "run_scenario", "sample_reachable", "sensor_attack_oracle",
    "setpoint_attack_oracle", "simulate_continuous", "simulate_discrete",
    "solve_fixed_a", "synthesize", "trajectory_to_csv", "verify_certificate",
]

"""Constrained charging of monotone battery models.

The package builds battery models as control systems, certifies the
monotonicity structure that justifies greedy charging, synthesises
bang-and-ride policies (the generalisation of CC-CV charging), tests
candidate trajectories against the interior-tail necessity condition for
optimality, and cross-checks everything against a brute-force oracle at
desk scale.
"""

from .errors import (AllInadmissibleError, CertificationError, ConfigError,
                     IntegrationBlowupError, MonorideError, ParameterError,
                     RideInfeasibleError)
from .dynamics import (ControlSystem, EcmParams, PadeSpmParams, FdSpmParams,
                       ThermalParams, affine_ocv, tabulated_ocv, DEFAULT_OCV,
                       build_ecm, ecm_voltage, build_pade_spm, build_fd_spm,
                       build_thermal_coupled_ecm)
from .ordering import (OrderRelation, vec_compare, is_metzler, is_nonneg,
                       MonotonicityReport, JacobianWitness, check_kamke_muller,
                       ExcitabilityReport, check_excitability,
                       TrajectoryOrderResult, trajectory_order_test,
                       check_cost_monotone)
from .constraints import (Constraint, ConstraintSet, PlatingTable,
                          upper_bound_state, upper_bound_input, lower_bound_input,
                          voltage_limit, temperature_limit, plating_constraint,
                          InputDirectionReport, verify_nonincreasing_in_u)
from .simulate import (Trajectory, RunningCost, MonotonicityClass,
                       soc_rate_cost, state_component_cost, rk4_step,
                       integrate, cost, max_violation, zero_order_hold)
from .bangride import (BangRidePolicy, ride_input, simulate_bang_ride,
                       engaged_profile)
from .optimality import (Improvement, NecessityVerdict, necessity_check,
                         improving_perturbation, OracleResult, brute_force_best,
                         sequence_control, GapResult, oracle_gap)
from .chart import Panel, render_chart, emit_chart, panels_from_trajectory
from .config import (ExperimentConfig, load_config, save_config, Problem,
                     build_problem)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "MonorideError", "ParameterError", "ConfigError", "IntegrationBlowupError",
    "RideInfeasibleError", "AllInadmissibleError", "CertificationError",
    # dynamics
    "ControlSystem", "EcmParams", "PadeSpmParams", "FdSpmParams", "ThermalParams",
    "affine_ocv", "tabulated_ocv", "DEFAULT_OCV", "build_ecm", "ecm_voltage",
    "build_pade_spm", "build_fd_spm", "build_thermal_coupled_ecm",
    # ordering
    "OrderRelation", "vec_compare", "is_metzler", "is_nonneg",
    "MonotonicityReport", "JacobianWitness", "check_kamke_muller",
    "ExcitabilityReport", "check_excitability", "TrajectoryOrderResult",
    "trajectory_order_test", "check_cost_monotone",
    # constraints
    "Constraint", "ConstraintSet", "PlatingTable", "upper_bound_state",
    "upper_bound_input", "lower_bound_input", "voltage_limit",
    "temperature_limit", "plating_constraint", "InputDirectionReport",
    "verify_nonincreasing_in_u",
    # simulate
    "Trajectory", "RunningCost", "MonotonicityClass", "soc_rate_cost",
    "state_component_cost", "rk4_step", "integrate", "cost", "max_violation",
    "zero_order_hold",
    # bangride
    "BangRidePolicy", "ride_input", "simulate_bang_ride", "engaged_profile",
    # optimality
    "Improvement", "NecessityVerdict", "necessity_check",
    "improving_perturbation", "OracleResult", "brute_force_best",
    "sequence_control", "GapResult", "oracle_gap",
    # chart
    "Panel", "render_chart", "emit_chart", "panels_from_trajectory",
    # config
    "ExperimentConfig", "load_config", "save_config", "Problem", "build_problem",
]

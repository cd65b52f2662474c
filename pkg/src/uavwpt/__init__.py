"""Trajectory optimization for single-UAV wireless power transfer.

A UAV-mounted transmitter charges ground energy receivers at known locations
over a finite horizon. This package computes the sum-energy-optimal single
hover, the max-min-fair multi-location hovering plan (Lagrangian dual +
ellipsoid method + time-sharing LP), speed-feasible successive hover-and-fly
trajectories, and SCP-refined discretized trajectories, and evaluates the
energy delivered along any trajectory.
"""

__version__ = "0.1.0"

from .model import (
    DiscreteTrajectory,
    DomainError,
    EnergyReport,
    Fly,
    Hover,
    Scenario,
    Trajectory,
    ValidationError,
    dbm_to_watts,
    db_to_linear,
    energy_along,
    energy_along_discrete,
    fly_leg_energies,
    hover_trajectory,
    linear_to_db,
    power_profile,
    received_power,
    report_to_json,
    scenario_from_json,
    scenario_to_json,
    sum_power,
    trajectory_from_json,
    trajectory_to_json,
    watts_to_dbm,
)
from .sumenergy import (
    HoverPoint,
    SumEnergySolution,
    TwoErClosedForm,
    solve_sum_energy,
    two_er_closed_form,
    two_er_sum_power,
)
from .minmax import (
    DualState,
    HoverSet,
    IdealMinMaxSolution,
    TimeSharingResult,
    dual_value_and_subgradient,
    solve_dual_ellipsoid,
    solve_minmax_ideal,
    time_sharing_lp,
    weighted_power_argmax,
)
from .pathplan import PathPlan, plan_open_path
from .hoverfly import (
    FixedPoint,
    HoverFlySolution,
    build_hover_fly,
    scale_trajectory,
    solve_fixed_point,
    two_er_trajectory,
)
from .scp import (
    ScpState,
    SurrogateModel,
    build_surrogate,
    default_slots,
    discretize,
    scp_optimize,
    solve_surrogate_subproblem,
)
from .harness import (
    BenchmarkResult,
    CellResult,
    SweepSpec,
    clustered_ten_scenario,
    discrete_to_trajectory,
    emit_outputs,
    run_sweep,
    scenario_for_value,
    sweep_spec_from_json,
)

__all__ = [
    "__version__",
    "BenchmarkResult",
    "CellResult",
    "DiscreteTrajectory",
    "DomainError",
    "DualState",
    "EnergyReport",
    "FixedPoint",
    "Fly",
    "Hover",
    "HoverFlySolution",
    "HoverPoint",
    "HoverSet",
    "IdealMinMaxSolution",
    "PathPlan",
    "Scenario",
    "ScpState",
    "SumEnergySolution",
    "SurrogateModel",
    "SweepSpec",
    "TimeSharingResult",
    "Trajectory",
    "TwoErClosedForm",
    "ValidationError",
    "build_hover_fly",
    "build_surrogate",
    "clustered_ten_scenario",
    "db_to_linear",
    "dbm_to_watts",
    "default_slots",
    "discrete_to_trajectory",
    "discretize",
    "dual_value_and_subgradient",
    "emit_outputs",
    "energy_along",
    "energy_along_discrete",
    "fly_leg_energies",
    "hover_trajectory",
    "linear_to_db",
    "plan_open_path",
    "power_profile",
    "received_power",
    "report_to_json",
    "run_sweep",
    "scale_trajectory",
    "scenario_for_value",
    "scenario_from_json",
    "scenario_to_json",
    "scp_optimize",
    "solve_dual_ellipsoid",
    "solve_fixed_point",
    "solve_minmax_ideal",
    "solve_sum_energy",
    "solve_surrogate_subproblem",
    "sum_power",
    "sweep_spec_from_json",
    "time_sharing_lp",
    "trajectory_from_json",
    "trajectory_to_json",
    "two_er_closed_form",
    "two_er_sum_power",
    "two_er_trajectory",
    "watts_to_dbm",
]

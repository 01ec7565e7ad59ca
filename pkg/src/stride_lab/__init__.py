"""stride_lab: reduced-order bipedal locomotion lab.

A 3D linear-inverted-pendulum hybrid simulator with two footstep planners
(a heuristic linear-step planner with Raibert-type velocity feedback, and a
dead-beat LIP baseline), plus deterministic gait benchmarks: velocity and
step-location tracking, cost of transport, push recovery, rough terrain,
and gap crossing.
"""

from .core import (
    BipedParams,
    EpisodeLog,
    EpisodeStatus,
    GaitCommand,
    HybridState,
    PlannerId,
    StepPlan,
    StepRecord,
    SwingSide,
    Terrain,
    TorsoState,
    default_params,
    orbital_energy,
)
from .metrics import (
    CotReport,
    PushGrid,
    TrackingStats,
    cost_of_transport,
    push_recovery_grid,
    step_location_mae,
    terrain_success_rate,
    velocity_tracking_stats,
)
from .planners import (
    DegenerateStepDuration,
    InfeasibleStep,
    PlannerInput,
    adjust_for_gap,
    plan_step_lipm,
    plan_step_ls,
    plan_x_step,
    plan_y_step,
    raibert_offset,
)
from .sim import (
    NoFixedPoint,
    SimConfig,
    StanceFlowResult,
    apply_push,
    detect_fall,
    linearized_step_map,
    simulate_episode,
    stance_flow,
    step_transition,
)

__all__ = [
    "BipedParams", "EpisodeLog", "EpisodeStatus", "GaitCommand", "HybridState",
    "PlannerId", "StepPlan", "StepRecord", "SwingSide", "Terrain", "TorsoState",
    "default_params", "orbital_energy",
    "CotReport", "PushGrid", "TrackingStats", "cost_of_transport",
    "push_recovery_grid", "step_location_mae", "terrain_success_rate",
    "velocity_tracking_stats",
    "DegenerateStepDuration", "InfeasibleStep", "PlannerInput", "adjust_for_gap",
    "plan_step_lipm", "plan_step_ls", "plan_x_step", "plan_y_step", "raibert_offset",
    "NoFixedPoint", "SimConfig", "StanceFlowResult", "apply_push", "detect_fall",
    "linearized_step_map", "simulate_episode", "stance_flow", "step_transition",
]

__version__ = "0.1.0"

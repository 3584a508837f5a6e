from .database import OUTCOMES, Attempt, FlowerDatabase, ReadinessEstimate
from .executive import (
    TRANSITIONS,
    Mission,
    MissionFailure,
    MissionPhase,
    TrajectorySample,
    run_mission,
    tick,
    valid_phase_sequence,
)
from .metrics import REPORT_FIELDS, Metrics, Report, summarize
from .navigation import PathFollower, dock_command, nearest_free_cell, plan_path, trajectory_clear
from .params import ArmParams, MissionParams, PlanningParams, Settings, VisionParams

__all__ = [
    "ArmParams", "Attempt", "FlowerDatabase", "Metrics", "Mission", "MissionFailure", "MissionParams",
    "MissionPhase", "OUTCOMES", "PathFollower", "PlanningParams", "REPORT_FIELDS", "ReadinessEstimate",
    "Report", "Settings", "TRANSITIONS", "TrajectorySample", "VisionParams", "dock_command",
    "nearest_free_cell", "plan_path", "run_mission", "summarize", "tick", "trajectory_clear",
    "valid_phase_sequence",
]

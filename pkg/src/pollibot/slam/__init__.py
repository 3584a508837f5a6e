from ..geometry import Pose2, pose_compose, pose_inverse
from .estimator import PoseGraphSlam, SlamParams
from .graph import (
    AnchorFactor,
    FactorGraph,
    GraphError,
    OdometryFactor,
    SingularSystem,
    diag_information,
    graph_cost,
    graph_residual,
    optimize_lm,
)
from .grid import FREE, OCCUPIED, UNKNOWN, GridSpec, OccupancyGrid, inflate, rasterize
from .icp import Degenerate, IcpResult, NoAlignment, estimate_initial_offset, icp_match, loop_closure_check

__all__ = [
    "AnchorFactor", "Degenerate", "FREE", "FactorGraph", "GraphError", "GridSpec", "IcpResult",
    "NoAlignment", "OCCUPIED", "OccupancyGrid", "OdometryFactor", "Pose2", "PoseGraphSlam",
    "SingularSystem", "SlamParams", "UNKNOWN", "diag_information", "estimate_initial_offset",
    "graph_cost", "graph_residual", "icp_match", "inflate", "loop_closure_check", "optimize_lm",
    "pose_compose", "pose_inverse", "rasterize",
]

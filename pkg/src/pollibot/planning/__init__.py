from .dwa import DWAParams, dwa_step, rollout, rollouts, window
from .grid_search import BlockedEndpoint, NoPath, dijkstra_path, path_cost
from .inspection import InspectionRoute, Unreachable, plan_inspection
from .selection import CandidateCell, CostParams, NoCandidates, cell_cost, next_pollination_cell
from .voronoi import NoFreeSpace, VoronoiEdge, VoronoiGraph, build_voronoi, ridge_mask

__all__ = [
    "BlockedEndpoint", "CandidateCell", "CostParams", "DWAParams", "InspectionRoute", "NoCandidates",
    "NoFreeSpace", "NoPath", "Unreachable", "VoronoiEdge", "VoronoiGraph", "build_voronoi", "cell_cost",
    "dijkstra_path", "dwa_step", "next_pollination_cell", "path_cost", "plan_inspection", "ridge_mask",
    "rollout", "rollouts", "window",
]

"""Path following on top of the planners: global Dijkstra path, lookahead
target selection, DWA tracking and a short-range docking controller."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..geometry import Pose2, wrap_angle
from ..planning import DWAParams, NoPath, dijkstra_path, dwa_step, rollouts
from ..slam import OccupancyGrid
from ..world import RobotState


def nearest_free_cell(grid: OccupancyGrid, point) -> tuple[int, int]:
    ix, iy = grid.world_to_cell(np.asarray(point, float)[None, :])
    cell = (int(ix[0]), int(iy[0]))
    if grid.is_free(cell):
        return cell
    ys, xs = np.nonzero(grid.values == 0)
    if len(xs) == 0:
        raise NoPath("the grid has no free cells")
    k = int(np.argmin((xs - cell[0]) ** 2 + (ys - cell[1]) ** 2))
    return int(xs[k]), int(ys[k])


def plan_path(grid: OccupancyGrid, start, goal) -> np.ndarray:
    """World-frame polyline from ``start`` to ``goal``; endpoints inside
    inflated space are snapped to the nearest free cell first."""
    cells = dijkstra_path(grid, nearest_free_cell(grid, start), nearest_free_cell(grid, goal))
    c = np.asarray(cells)
    pts = grid.cell_center(c[:, 0], c[:, 1])
    return np.vstack([pts, np.asarray(goal, float)[None, :]])


class PathFollower:
    """Tracks progress along a polyline and hands out lookahead goals.

    Progress only moves forward, and the lookahead is measured along the path,
    so routes that double back on themselves are followed in order.
    """

    def __init__(self, path, lookahead: float, window: float = 1.0):
        self.path = np.asarray(path, float).reshape(-1, 2)
        seg = np.hypot(*np.diff(self.path, axis=0).T) if len(self.path) > 1 else np.zeros(0)
        self.arc = np.concatenate([[0.0], np.cumsum(seg)])
        self.lookahead = lookahead
        self.window = window
        self.index = 0

    @property
    def end(self) -> np.ndarray:
        return self.path[-1]

    def update(self, position) -> np.ndarray:
        p = np.asarray(position, float)
        hi = int(np.searchsorted(self.arc, self.arc[self.index] + self.window, side="right"))
        ahead = self.path[self.index:max(hi, self.index + 1)]
        self.index += int(np.argmin(np.hypot(*(ahead - p).T)))
        j = int(np.searchsorted(self.arc, self.arc[self.index] + self.lookahead, side="left"))
        return self.path[min(j, len(self.path) - 1)]

    @property
    def remaining(self) -> float:
        return float(self.arc[-1] - self.arc[self.index])


def trajectory_clear(grid: OccupancyGrid, pose: Pose2, v: float, omega: float, horizon: float = 0.5, sim_dt: float = 0.05) -> bool:
    traj = rollouts(pose.x, pose.y, pose.theta, [v], [omega], horizon, sim_dt)[0]
    return not bool(grid.blocked(traj[:, :2]).any())


def dock_command(
    pose: Pose2,
    goal: Pose2,
    arrive_position: float,
    speed: float,
    omega_max: float,
    aligning: bool,
) -> tuple[float, float, bool]:
    """Proportional approach to ``goal``: drive to the point, then turn to its
    heading. Returns (v, omega, aligning); ``aligning`` latches once the
    position is well inside tolerance and releases if it drifts back out."""
    dx, dy = goal.x - pose.x, goal.y - pose.y
    dist = math.hypot(dx, dy)
    if aligning and dist > arrive_position:
        aligning = False
    elif not aligning and dist < 0.6 * arrive_position:
        aligning = True
    if aligning:
        err = wrap_angle(goal.theta - pose.theta)
        w = max(-omega_max, min(omega_max, 1.5 * err))
        if abs(w) < 0.05:
            w = math.copysign(0.05, err) if err != 0 else 0.0
        return 0.0, w, True
    err = wrap_angle(math.atan2(dy, dx) - pose.theta)
    w = max(-omega_max, min(omega_max, 2.0 * err))
    if abs(err) > 0.35:
        return 0.0, w, False
    return min(speed, 1.0 * dist) * math.cos(err), w, False


def drive_command(
    pose: Pose2, last: tuple[float, float], local_goal, grid: OccupancyGrid, params: DWAParams
) -> tuple[float, float]:
    return dwa_step(RobotState(pose, v=last[0], omega=last[1]), local_goal, grid, params)


def escape_field(grid: OccupancyGrid) -> np.ndarray:
    """Per cell, the (ix, iy) of the nearest occupied cell: (2, height, width)."""
    free = grid.values == 0
    if free.all():
        return np.full((2,) + free.shape, -1, dtype=np.int64)
    _, idx = ndimage.distance_transform_edt(free, return_indices=True)
    return np.stack([idx[1], idx[0]])


def escape_command(field: np.ndarray, grid: OccupancyGrid, pose: Pose2, speed: float, omega_max: float) -> tuple[float, float]:
    """Turn to face directly away from the nearest obstacle, then creep forward."""
    ix, iy = grid.world_to_cell(pose.position[None, :])
    ix, iy = int(np.clip(ix[0], 0, grid.width - 1)), int(np.clip(iy[0], 0, grid.height - 1))
    ox, oy = field[0, iy, ix], field[1, iy, ix]
    if ox < 0:
        return 0.0, 0.0
    away = pose.position - grid.cell_center(ox, oy)[0]
    if not np.any(away):
        return 0.0, omega_max
    err = wrap_angle(math.atan2(away[1], away[0]) - pose.theta)
    w = max(-omega_max, min(omega_max, 2.0 * err))
    if abs(err) > 0.3:
        return 0.0, w
    return speed, w

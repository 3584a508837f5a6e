"""Dynamic Window Approach local controller."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import wrap_angle
from ..slam.grid import OccupancyGrid
from ..world import RobotState


@dataclass(frozen=True)
class DWAParams:
    v_min: float = 0.0
    v_max: float = 0.4
    omega_max: float = 1.0
    acc_v: float = 0.5
    acc_omega: float = 2.0
    n_v: int = 7
    n_omega: int = 15
    horizon: float = 1.0
    dt: float = 0.1  # control period that sets the window
    sim_dt: float = 0.05
    w_heading: float = 1.0
    w_clearance: float = 0.3
    w_velocity: float = 0.3
    clearance_cap: float = 0.5

    def __post_init__(self):
        vals = (self.v_max, self.omega_max, self.acc_v, self.acc_omega, self.horizon, self.dt, self.sim_dt,
                self.w_heading, self.w_clearance, self.w_velocity, self.clearance_cap)
        if min(vals) < 0 or self.v_min < 0 or self.v_min > self.v_max:
            raise ValueError("DWA bounds and weights must be non-negative with v_min <= v_max")
        if self.n_v < 2 or self.n_omega < 2:
            raise ValueError("need at least two samples per axis")


def rollout(x, y, th, v, omega, horizon, sim_dt) -> np.ndarray:
    """Poses along a constant-command arc, (k, 3) including the start."""
    n = max(1, int(math.ceil(horizon / sim_dt - 1e-9)))
    t = np.arange(n + 1) * (horizon / n)
    if abs(omega) > 1e-9:
        r = v / omega
        ths = th + omega * t
        xs = x + r * (np.sin(ths) - math.sin(th))
        ys = y - r * (np.cos(ths) - math.cos(th))
    else:
        ths = np.full_like(t, th)
        xs = x + v * t * math.cos(th)
        ys = y + v * t * math.sin(th)
    return np.column_stack([xs, ys, ths])


def window(state: RobotState, p: DWAParams) -> tuple[np.ndarray, np.ndarray]:
    v_lo = max(p.v_min, state.v - p.acc_v * p.dt)
    v_hi = min(p.v_max, state.v + p.acc_v * p.dt)
    w_lo = max(-p.omega_max, state.omega - p.acc_omega * p.dt)
    w_hi = min(p.omega_max, state.omega + p.acc_omega * p.dt)
    vs = np.linspace(v_lo, v_hi, p.n_v) if v_lo <= v_hi else np.zeros(0)
    ws = np.linspace(w_lo, w_hi, p.n_omega) if w_lo <= w_hi else np.zeros(0)
    return vs, ws


def _goal_error(x, y, th, goal) -> float:
    return abs(float(wrap_angle(math.atan2(goal[1] - y, goal[0] - x) - th)))


def rollouts(x, y, th, v, omega, horizon, sim_dt) -> np.ndarray:
    """Vectorised ``rollout`` over command arrays: (samples, k, 3)."""
    v = np.asarray(v, float)[:, None]
    w = np.asarray(omega, float)[:, None]
    n = max(1, int(math.ceil(horizon / sim_dt - 1e-9)))
    t = (np.arange(n + 1) * (horizon / n))[None, :]
    turning = np.abs(w) > 1e-9
    w_safe = np.where(turning, w, 1.0)
    ths = th + w * t
    r = v / w_safe
    xs = np.where(turning, x + r * (np.sin(ths) - math.sin(th)), x + v * t * math.cos(th))
    ys = np.where(turning, y - r * (np.cos(ths) - math.cos(th)), y + v * t * math.sin(th))
    return np.stack([xs, ys, np.broadcast_to(ths, xs.shape)], axis=-1)


def dwa_step(state: RobotState, local_goal, grid: OccupancyGrid, params: DWAParams = DWAParams()) -> tuple[float, float]:
    """Best admissible (v, omega) in the dynamic window.

    ``grid`` is expected to be inflated by the robot radius so the robot can be
    checked as a point. A sample is admissible when its whole horizon stays in
    free cells and it can brake to rest within the smallest clearance it sees.
    Scores, each in [0, 1]: heading to goal at the horizon end, clearance
    (capped), and forward speed weighted by how much the goal lies ahead.
    Equal scores prefer the faster, then the straighter sample.
    """
    p = params
    pose = state.pose
    goal = np.asarray(local_goal, float)
    vs, ws = window(state, p)
    if len(vs) and len(ws):
        vv, ww = (a.ravel() for a in np.meshgrid(vs, ws, indexing="ij"))
        traj = rollouts(pose.x, pose.y, pose.theta, vv, ww, p.horizon, p.sim_dt)
        m, k = traj.shape[:2]
        pts = traj[:, :, :2].reshape(-1, 2)
        blocked = grid.blocked(pts).reshape(m, k).any(axis=1)
        clear = grid.clearance_at(traj[:, 1:, :2].reshape(-1, 2)).reshape(m, k - 1).min(axis=1)
        ok = ~blocked & ~((vv > 0) & (vv * vv / (2.0 * p.acc_v) > clear))
    else:
        ok = np.zeros(0, bool)
    if ok.any():
        end = traj[:, -1]
        err = np.abs(wrap_angle(np.arctan2(goal[1] - end[:, 1], goal[0] - end[:, 0]) - end[:, 2]))
        ahead = max(0.0, math.cos(_goal_error(pose.x, pose.y, pose.theta, goal)))
        heading = 1.0 - err / math.pi
        clearance = np.minimum(clear, p.clearance_cap) / p.clearance_cap if p.clearance_cap > 0 else 0.0 * clear
        velocity = (vv / p.v_max) * ahead if p.v_max > 0 else 0.0 * vv
        score = p.w_heading * heading + p.w_clearance * clearance + p.w_velocity * velocity
        idx = np.flatnonzero(ok)
        # lexsort: last key is primary
        best = idx[np.lexsort((np.abs(ww[idx]), -vv[idx], -score[idx]))[0]]
        return float(vv[best]), float(ww[best])
    bearing = wrap_angle(math.atan2(goal[1] - pose.y, goal[0] - pose.x) - pose.theta)
    return 0.0, math.copysign(p.omega_max, bearing) if bearing != 0 else p.omega_max

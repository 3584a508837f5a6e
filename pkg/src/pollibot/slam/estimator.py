"""Keyframe pose-graph estimator anchored to a prior map.

Odometry increments are chained between keyframes; every keyframe scan is
matched against the prior map and, when the match fraction clears the gate,
added as a global anchor, after which the whole graph is re-solved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import Pose2
from .graph import FactorGraph, diag_information, optimize_lm
from .icp import Degenerate, icp_match, loop_closure_check


@dataclass(frozen=True)
class SlamParams:
    keyframe_distance: float = 0.25
    keyframe_angle: float = math.radians(10.0)
    loop_closure_threshold: float = 0.8
    icp_d_corr: float = 0.2
    icp_max_iters: int = 10
    icp_tol: float = 1e-6
    anchor_sigma_xy: float = 0.01
    anchor_sigma_theta: float = 0.003
    lm_lambda0: float = 1e-4
    lm_max_iters: int = 20
    lm_tol: float = 1e-6
    min_odom_variance: float = 1e-10
    window: int = 50  # newest keyframes re-solved per anchor; 0 means the whole graph


class PoseGraphSlam:
    def __init__(self, prior_map, params: SlamParams = SlamParams(), tree=None):
        self.prior_map = np.asarray(prior_map, dtype=float).reshape(-1, 2)
        self.tree = tree if tree is not None else cKDTree(self.prior_map)
        self.params = params
        self.graph = FactorGraph()
        self.estimate = np.zeros((0, 3))
        self.accepted = 0
        self.rejected = 0
        self._reset_accumulator()

    def _reset_accumulator(self):
        self._delta = Pose2()
        self._var_t = 0.0
        self._var_r = 0.0
        self._path = 0.0
        self._turn = 0.0

    def start(self, global_pose: Pose2) -> None:
        """First keyframe, anchored at the initial-offset estimate."""
        n = self.graph.add_node()
        p = self.params
        self.graph.add_anchor(n, global_pose, diag_information(p.anchor_sigma_xy, p.anchor_sigma_theta))
        self.estimate = global_pose.as_array()[None, :]
        self._reset_accumulator()

    @property
    def started(self) -> bool:
        return self.graph.num_nodes > 0

    @property
    def keyframe_pose(self) -> Pose2:
        return Pose2.from_array(self.estimate[-1])

    @property
    def pose(self) -> Pose2:
        """High-rate estimate: last keyframe composed with odometry since."""
        return self.keyframe_pose.compose(self._delta)

    def add_odometry(self, increment: Pose2, var_trans: float, var_rot: float) -> None:
        self._delta = self._delta.compose(increment)
        self._var_t += var_trans
        self._var_r += var_rot
        self._path += math.hypot(increment.x, increment.y)
        self._turn += abs(increment.theta)

    def keyframe_due(self) -> bool:
        p = self.params
        return self._path >= p.keyframe_distance or self._turn >= p.keyframe_angle

    def add_keyframe(self, scan_points) -> bool:
        """Close the current odometry interval with a new node; returns whether
        the scan was accepted as an anchor."""
        p = self.params
        prev = self.graph.num_nodes - 1
        n = self.graph.add_node()
        vt = max(self._var_t, p.min_odom_variance)
        vr = max(self._var_r, p.min_odom_variance)
        self.graph.add_odometry(prev, n, self._delta, np.diag([1 / vt, 1 / vt, 1 / vr]))
        predicted = self.pose
        self.estimate = np.vstack([self.estimate, predicted.as_array()])
        self._reset_accumulator()

        accepted = False
        pts = np.asarray(scan_points, dtype=float).reshape(-1, 2)
        if len(pts) >= 3:
            try:
                res = icp_match(pts, self.prior_map, predicted, p.icp_max_iters, p.icp_d_corr, p.icp_tol, self.tree)
                accepted = loop_closure_check(res, p.loop_closure_threshold)
            except Degenerate:
                accepted = False
        if accepted:
            self.graph.add_anchor(n, res.transform, diag_information(p.anchor_sigma_xy, p.anchor_sigma_theta))
            self._resolve()
            self.accepted += 1
        else:
            self.rejected += 1
        return accepted

    def _resolve(self) -> None:
        p = self.params
        n = self.graph.num_nodes
        if not p.window or n <= p.window:
            self.estimate = optimize_lm(self.graph, self.estimate, p.lm_lambda0, p.lm_max_iters, p.lm_tol)
            return
        # fixed-lag smoothing: older poses are held, and the odometry link
        # into the window becomes a prior on its first pose
        lo = n - p.window
        sub = FactorGraph()
        for _ in range(p.window):
            sub.add_node()
        for f in reversed(self.graph.odometry):
            if f.to_node < lo:
                break
            if f.from_node >= lo:
                sub.add_odometry(f.from_node - lo, f.to_node - lo, f.measurement, f.information)
            else:
                held = Pose2.from_array(self.estimate[f.from_node]).compose(f.measurement)
                sub.add_anchor(f.to_node - lo, held, f.information)
        for f in reversed(self.graph.anchors):
            if f.node < lo:
                break
            sub.add_anchor(f.node - lo, f.measurement, f.information)
        self.estimate[lo:] = optimize_lm(sub, self.estimate[lo:], p.lm_lambda0, p.lm_max_iters, p.lm_tol)

    def keyframe_poses(self) -> list[Pose2]:
        return [Pose2.from_array(r) for r in self.estimate]

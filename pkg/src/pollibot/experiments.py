"""Scripted, seeded experiments used by the acceptance suite and the README."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Pose2
from .slam import PoseGraphSlam, SlamParams
from .world import (
    OdomNoise,
    PlantRow,
    ScanSpec,
    World,
    WorldConfig,
    build_world,
    prior_map,
    scan_to_points,
    simulate_odometry,
    simulate_scan,
)


def three_row_config(**overrides) -> WorldConfig:
    """The bundled 8 m x 8.2 m room with three 3.44 m rows, offset so the
    layout has no rotational symmetry."""
    rows = (
        PlantRow("A", (1.8, 1.8)),
        PlantRow("B", (1.8, 4.0)),
        PlantRow("C", (1.8, 6.2)),
    )
    base = dict(room_width=8.0, room_length=8.2, rows=rows, robot_start=(0.9, 0.9, 0.0))
    base.update(overrides)
    return WorldConfig(**base)


def random_three_row_config(seed: int) -> WorldConfig:
    """A valid room with three parallel rows at random spacing, offset and
    room size. Corridors stay wider than the robot so every side is driveable."""
    rng = np.random.default_rng(seed)
    width = float(rng.uniform(7.0, 9.0))
    x0 = float(rng.uniform(1.3, width - 3.44 - 1.3))
    gaps = rng.uniform(1.6, 2.4, size=2)
    margin_lo, margin_hi = rng.uniform(1.3, 2.0, size=2)
    ys = [margin_lo, margin_lo + gaps[0], margin_lo + gaps[0] + gaps[1]]
    length = float(ys[-1] + margin_hi)
    rows = tuple(PlantRow(rid, (x0 + float(rng.uniform(-0.3, 0.3)), float(y))) for rid, y in zip("ABC", ys))
    return WorldConfig(room_width=width, room_length=length, rows=rows, robot_start=(0.7, 0.7, 0.0))


def rectangle_loop(corner=(0.9, 0.9), width=5.7, height=4.2, step=0.25, turn_step=math.radians(10.0)) -> list[Pose2]:
    """Ground-truth keyframe poses for a counter-clockwise rectangular loop."""
    poses = [Pose2(corner[0], corner[1], 0.0)]
    for k, length in enumerate((width, height, width, height)):
        n = int(round(length / step))
        for _ in range(n):
            poses.append(poses[-1].compose(Pose2(length / n, 0.0, 0.0)))
        if k < 3:
            m = int(round((math.pi / 2) / turn_step))
            for _ in range(m):
                poses.append(poses[-1].compose(Pose2(0.0, 0.0, (math.pi / 2) / m)))
    return poses


@dataclass(frozen=True)
class LoopTrial:
    slam_error: float
    dead_reckoning_error: float
    anchors_accepted: int
    keyframes: int


def loop_trial(
    seed: int,
    world: World | None = None,
    noise: OdomNoise = OdomNoise(0.02, 0.01),
    scan_spec: ScanSpec = ScanSpec(beam_count=180),
    params: SlamParams = SlamParams(window=0),
    tree: cKDTree | None = None,
    truth: list[Pose2] | None = None,
) -> LoopTrial:
    """Drive the rectangular loop with noisy per-step odometry and compare the
    anchored pose-graph estimate of the final pose against dead reckoning."""
    if world is None:
        world = build_world(three_row_config())
    pmap = prior_map(world)
    tree = tree if tree is not None else cKDTree(pmap)
    truth = truth if truth is not None else rectangle_loop()
    odo_rng, scan_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    slam = PoseGraphSlam(pmap, params, tree=tree)
    slam.start(truth[0])
    dead = truth[0]
    var_t, var_r = noise.sigma_trans**2, noise.sigma_rot**2
    for prev, curr in zip(truth[:-1], truth[1:]):
        z = simulate_odometry(prev, curr, noise, odo_rng)
        dead = dead.compose(z)
        slam.add_odometry(z, var_t, var_r)
        ranges = simulate_scan(world, curr, scan_spec, scan_rng)
        slam.add_keyframe(scan_to_points(ranges, scan_spec))
    final = slam.keyframe_pose
    return LoopTrial(
        slam_error=final.distance_to(truth[-1]),
        dead_reckoning_error=dead.distance_to(truth[-1]),
        anchors_accepted=slam.accepted,
        keyframes=len(truth),
    )

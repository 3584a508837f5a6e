"""The mission state machine.

One ``tick`` runs the current phase for one control period. Phase changes
that need no motion or arm time happen inside the same tick, so a run only
accumulates simulated time while the robot drives, waits or works the arm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.spatial import cKDTree

from ..arm import (
    ZERO,
    EndEffectorState,
    NoConvergence,
    ServoState,
    Unreachable,
    ik,
    joint_distance,
    order_exact,
    order_nn,
    plane_coordinates,
    pollinate,
    servo_bound,
    servo_step,
    survey_workspace,
    EXACT_LIMIT,
)
from ..errors import PollibotError
from ..geometry import Pose2, relative_pose, wrap_angle
from ..maps import world_grid
from ..planning import (
    BlockedEndpoint,
    CandidateCell,
    CostParams,
    NoCandidates,
    NoFreeSpace,
    NoPath,
    next_pollination_cell,
    plan_inspection,
    build_voronoi,
)
from ..planning import Unreachable as RouteUnreachable
from ..slam import NoAlignment, PoseGraphSlam, estimate_initial_offset, inflate
from ..vision import bearing_to_cell
from ..world import (
    FlowerState,
    OdomNoise,
    World,
    parking_pose,
    prior_map,
    scan_to_points,
    simulate_cluster_detections,
    simulate_odometry,
    simulate_scan,
    step,
)
from .database import Attempt, FlowerDatabase
from .metrics import Metrics
from .navigation import (
    PathFollower,
    dock_command,
    drive_command,
    escape_command,
    escape_field,
    plan_path,
    trajectory_clear,
)
from .params import Settings


class MissionFailure(PollibotError):
    pass


class MissionPhase(str, enum.Enum):
    INIT = "Init"
    INSPECT = "Inspect"
    SELECT_CELL = "SelectCell"
    DRIVE = "Drive"
    WORKSPACE_SURVEY = "WorkspaceSurvey"
    POLLINATE_SEQUENCE = "PollinateSequence"
    DONE = "Done"


P = MissionPhase
TRANSITIONS = {
    P.INIT: frozenset({P.INSPECT}),
    P.INSPECT: frozenset({P.SELECT_CELL}),
    P.SELECT_CELL: frozenset({P.DRIVE, P.DONE}),
    P.DRIVE: frozenset({P.WORKSPACE_SURVEY, P.SELECT_CELL}),  # back to selection when a cell is skipped
    P.WORKSPACE_SURVEY: frozenset({P.POLLINATE_SEQUENCE}),
    P.POLLINATE_SEQUENCE: frozenset({P.SELECT_CELL}),
    P.DONE: frozenset(),
}


def valid_phase_sequence(phases: Iterable[MissionPhase]) -> bool:
    seq = list(phases)
    if not seq or seq[0] is not P.INIT:
        return False
    return all(b in TRANSITIONS[a] for a, b in zip(seq[:-1], seq[1:]))


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    theta: float
    phase: MissionPhase


@dataclass
class _Task:
    flower_id: str
    config: object
    until: float
    converged: bool


MAX_INSTANT_TRANSITIONS = 16


class Mission:
    """Mutable executive state. Planners see only the pose estimate; the
    true world is touched for sensor simulation, the arm, and metrics."""

    def __init__(self, world: World, settings: Settings = Settings(), seed: Optional[int] = None):
        self.settings = settings
        self.seed = world.config.seed if seed is None else int(seed)
        streams = np.random.SeedSequence(self.seed).spawn(5)
        self.rng_odom, self.rng_scan, self.rng_camera, self.rng_survey, self.rng_servo = (
            np.random.default_rng(s) for s in streams
        )
        pl = settings.planning
        self.grid = world_grid(world, pl.resolution)
        self.global_grid = inflate(self.grid, pl.inflate_global)
        self.local_grid = inflate(self.grid, pl.inflate_local)
        self._escape = escape_field(self.grid)
        try:
            self.graph = build_voronoi(self.grid, world.rows, world.config.d_park, pl.prune_length)
        except NoFreeSpace as e:
            raise MissionFailure(str(e)) from e
        self.prior = prior_map(world)
        self.tree = cKDTree(self.prior)
        self.slam = PoseGraphSlam(self.prior, settings.slam, tree=self.tree)
        self.db = FlowerDatabase()
        self.metrics = Metrics()
        self.phase = P.INIT
        self.phases = [P.INIT]
        p = world.robot.pose
        self.trajectory = [TrajectorySample(world.time, p.x, p.y, p.theta, P.INIT)]
        self.route = None
        self.follower: Optional[PathFollower] = None
        self.q = ZERO
        self.effector = EndEffectorState()
        self.drives: list = []  # (cell, parking pose) per Drive entry
        self._cmd = (0.0, 0.0)
        self._next_camera = world.time
        self._init_failures = 0
        self._failures = 0
        self._target = None
        self._parking: Optional[Pose2] = None
        self._docking = False
        self._aligning = False
        self._until: Optional[float] = None
        self._targets: list = []
        self._task: Optional[_Task] = None
        self._progress = (0, math.inf, world.time)
        self._collided = world.collided
        self._note_ready(world)

    # -- bookkeeping -------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.phase is P.DONE

    def _goto(self, phase: MissionPhase) -> None:
        if phase not in TRANSITIONS[self.phase]:
            raise MissionFailure(f"illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase
        self.phases.append(phase)

    def _note_ready(self, world: World) -> None:
        for f in world.flowers:
            if f.state is FlowerState.READY:
                self.db.ready_seen.add(f.id)

    def _reset_progress(self, time: float) -> None:
        self._progress = (0, math.inf, time)

    def _stuck(self, time: float, index: int, dist: float) -> bool:
        best_index, best_dist, since = self._progress
        if index > best_index or dist < best_dist - 0.02:
            self._progress = (max(index, best_index), min(dist, best_dist), time)
            return False
        return time - since > self.settings.mission.stuck_time

    # -- phases ------------------------------------------------------------

    def _init(self, world: World):
        spec = world.config.scan_spec
        pts = scan_to_points(simulate_scan(world, world.robot.pose, spec, self.rng_scan), spec)
        try:
            pose = estimate_initial_offset(
                pts, self.prior, threshold=self.settings.slam.loop_closure_threshold, tree=self.tree
            )
        except NoAlignment as e:
            self._init_failures += 1
            if self._init_failures > 1:
                raise MissionFailure(f"initial localisation failed twice: {e}") from e
            return world, None
        self.slam.start(pose)
        if self.graph.required_edges():
            try:
                self.route = plan_inspection(self.graph, self.graph.nearest_node(pose.position))
                self._start_inspection(pose.position, self.route.polyline, world.time)
            except (RouteUnreachable, NoPath, BlockedEndpoint) as e:
                raise MissionFailure(f"no inspection route: {e}") from e
        self._failures = 0
        self._goto(P.INSPECT)
        return world, None

    def _start_inspection(self, position, polyline, time: float) -> None:
        lead = plan_path(self.global_grid, position, polyline[0])
        self.follower = PathFollower(np.vstack([lead, polyline]), self.settings.planning.lookahead)
        self._reset_progress(time)

    def _dwa(self, est: Pose2, goal) -> tuple[float, float]:
        pl = self.settings.planning
        if self.local_grid.blocked(est.position[None, :])[0]:
            # the estimate has slipped inside the safety margin: back out first
            return escape_command(self._escape, self.grid, est, pl.escape_speed, pl.dwa.omega_max)
        return drive_command(est, self._cmd, goal, self.local_grid, pl.dwa)

    def _track(self, follower: PathFollower) -> tuple[float, float]:
        est = self.slam.pose
        return self._dwa(est, follower.update(est.position))

    def _inspect(self, world: World):
        f = self.follower
        if f is None:
            self._goto(P.SELECT_CELL)
            return world, None
        est = self.slam.pose
        f.update(est.position)
        if f.remaining < 1e-9 and float(np.hypot(*(f.end - est.position))) < self.settings.mission.dock_radius:
            self.follower = None
            self._goto(P.SELECT_CELL)
            return world, None
        cmd = self._track(f)
        if self._stuck(world.time, f.index, math.inf):
            self._failures += 1
            if self._failures > 1:
                self.follower = None
                self._goto(P.SELECT_CELL)
                return world, None
            rest = f.path[min(f.index + 1, len(f.path) - 1):]
            try:
                self._start_inspection(est.position, rest, world.time)
            except (NoPath, BlockedEndpoint):
                self.follower = None
                self._goto(P.SELECT_CELL)
                return world, None
        return world, cmd

    def _select(self, world: World):
        m = self.settings.mission
        t = world.time
        cands = []
        for cell in sorted(self.db.estimates):
            n = self.db.ready_count(cell, t, m.readiness_margin)
            if n > 0:
                cands.append(CandidateCell(cell, parking_pose(world, cell), n))
        try:
            choice = next_pollination_cell(self.slam.pose, cands, CostParams(self.settings.planning.c_d, self.settings.planning.c_f))
        except NoCandidates:
            if self.db.next_ready_time(t, m.readiness_margin) is None:
                self._goto(P.DONE)
                return world, None
            return world, (0.0, 0.0)  # flowers still budding: wait in place
        self._target, self._parking = choice.cell, choice.parking
        self.drives.append((choice.cell, choice.parking))
        self.follower = None
        self._docking = self._aligning = False
        self._failures = 0
        self._goto(P.DRIVE)
        return world, None

    def _drive_failed(self, world: World):
        self._failures += 1
        self.follower = None
        self._docking = self._aligning = False
        if self._failures > 1:
            self.db.skip(self._target, world.time)
            self._goto(P.SELECT_CELL)
        return world, None

    def _drive(self, world: World):
        m = self.settings.mission
        goal = self._parking
        est = self.slam.pose
        dist = math.hypot(goal.x - est.x, goal.y - est.y)
        if dist < m.arrive_position and abs(wrap_angle(goal.theta - est.theta)) < m.arrive_heading:
            self.follower = None
            self._until = None
            self._goto(P.WORKSPACE_SURVEY)
            return world, None
        if self.follower is None:
            try:
                self.follower = PathFollower(plan_path(self.global_grid, est.position, goal.position), self.settings.planning.lookahead)
            except (NoPath, BlockedEndpoint):
                return self._drive_failed(world)
            self._reset_progress(world.time)
        f = self.follower
        f.update(est.position)
        if self._docking and dist > 2.0 * m.dock_radius:
            self._docking = self._aligning = False
        elif dist < m.dock_radius:
            self._docking = True
        if self._docking:
            v, w, self._aligning = dock_command(est, goal, m.arrive_position, m.dock_speed, self.settings.planning.dwa.omega_max, self._aligning)
            if not trajectory_clear(self.local_grid, est, v, w):
                v, w = self._dwa(est, goal.position)
            # turning on the spot counts as progress while aligning
            progress = dist if not self._aligning else dist - abs(wrap_angle(goal.theta - est.theta))
        else:
            v, w = self._track(f)
            progress = dist
        if self._stuck(world.time, f.index, progress):
            return self._drive_failed(world)
        return world, (v, w)

    def _survey(self, world: World):
        a = self.settings.arm
        if self._until is None:
            self._until = world.time + a.survey_time
            self._targets = survey_workspace(world, self._target, a.sigma_far, self.rng_survey, a.spec, world.robot.pose)
        if world.time < self._until - 1e-9:
            return world, (0.0, 0.0)
        m = self.settings.mission
        self.db.record_visit(self._target, world.time, len(self._targets), m.recheck_delay, m.max_rechecks)
        robot = world.robot.pose
        reachable, configs = [], []
        for t in self._targets:
            try:
                configs.append(ik(a.spec, plane_coordinates(a.spec, robot, t.position), self.q))
                reachable.append(t)
            except (Unreachable, NoConvergence):
                self._attempt(world, t.flower_id, "unreachable")
        order, _ = (order_exact if len(configs) <= EXACT_LIMIT else order_nn)(self.q, configs)
        self._targets = [(reachable[i], configs[i]) for i in order]
        self._task = None
        self._until = None
        self._goto(P.POLLINATE_SEQUENCE)
        return world, None

    def _attempt(self, world: World, flower_id: str, outcome: str, coverage: float = 0.0) -> None:
        self.db.record_attempt(Attempt(flower_id, self._target, world.time, outcome, coverage))

    def _start_task(self, world: World, target, config) -> _Task:
        a = self.settings.arm
        robot = world.robot.pose
        base = a.spec.base_position(robot)
        est = np.asarray(target.position, float)
        back = base[:2] - est[:2]
        n = float(np.hypot(*back))
        tip = est.copy()
        if n > 1e-9:
            tip[:2] += a.approach_standoff * back / n
        truth = np.asarray(world.flower(target.flower_id).position, float)
        state = ServoState.start(tip, est)
        cap = servo_bound(float(np.linalg.norm(tip - truth)), a.servo) + 10
        steps = 0
        while not state.converged and steps < cap:
            state = servo_step(state, truth, a.servo, self.rng_servo)
            steps += 1
        duration = joint_distance(self.q, config) / a.joint_speed + steps * a.servo_step_time
        if state.converged:
            duration += a.strokes * a.stroke_time
        return _Task(target.flower_id, config, world.time + duration, state.converged)

    def _pollinate(self, world: World):
        while True:
            if self._task is None:
                if not self._targets:
                    self._goto(P.SELECT_CELL)
                    return world, None
                target, config = self._targets.pop(0)
                self._task = self._start_task(world, target, config)
            task = self._task
            if world.time < task.until - 1e-9:
                return world, (0.0, 0.0)
            self.q = task.config
            flower = world.flower(task.flower_id)
            a = self.settings.arm
            if not task.converged:
                self._attempt(world, flower.id, "servo_failed")
            elif flower.state is not FlowerState.READY:
                self._attempt(world, flower.id, "not_ready")
            else:
                self.effector, flower = pollinate(self.effector, flower, a.strokes, a.delta, a.threshold, time=world.time)
                world = world.with_flower(flower)
                done = flower.state is FlowerState.POLLINATED
                self._attempt(world, flower.id, "pollinated" if done else "incomplete", flower.pistil_coverage)
            self._task = None

    _HANDLERS = {
        P.INIT: _init,
        P.INSPECT: _inspect,
        P.SELECT_CELL: _select,
        P.DRIVE: _drive,
        P.WORKSPACE_SURVEY: _survey,
        P.POLLINATE_SEQUENCE: _pollinate,
    }

    # -- simulation --------------------------------------------------------

    def _advance(self, world: World, cmd, dt: float) -> World:
        phase = self.phase
        prev = world.robot.pose
        world = step(world, cmd[0], cmd[1], dt)
        cur = world.robot.pose
        self._cmd = (world.robot.v, world.robot.omega)

        sp = self.settings.slam
        noise = world.config.odom_noise
        rel = relative_pose(prev, cur)
        share = math.hypot(rel.x, rel.y) / sp.keyframe_distance + abs(rel.theta) / sp.keyframe_angle
        s = math.sqrt(share)
        scaled = OdomNoise(noise.sigma_trans * s, noise.sigma_rot * s)
        z = simulate_odometry(prev, cur, scaled, self.rng_odom)
        if self.slam.started:
            self.slam.add_odometry(z, scaled.sigma_trans**2, scaled.sigma_rot**2)
            if self.slam.keyframe_due():
                spec = world.config.scan_spec
                self.slam.add_keyframe(scan_to_points(simulate_scan(world, cur, spec, self.rng_scan), spec))

        if phase is P.INSPECT and world.time >= self._next_camera - 1e-9:
            self._next_camera = world.time + world.config.camera_spec.period
            self._observe(world)

        m = self.metrics
        m.distance_m += math.hypot(cur.x - prev.x, cur.y - prev.y)
        m.sim_time_s = world.time
        m.phase_durations[phase.value] = m.phase_durations.get(phase.value, 0.0) + dt
        if world.collided and not self._collided:
            m.collisions += 1
        self._collided = world.collided
        if self.slam.started:
            est = self.slam.pose
            m.pose_sq_sum += (est.x - cur.x) ** 2 + (est.y - cur.y) ** 2
            m.pose_samples += 1
        self.trajectory.append(TrajectorySample(world.time, cur.x, cur.y, cur.theta, phase))
        self._note_ready(world)
        return world

    def _observe(self, world: World) -> None:
        cam = world.config.camera_spec
        est = self.slam.pose
        for ev in simulate_cluster_detections(world, world.robot.pose, cam, self.rng_camera):
            cell = bearing_to_cell(est, ev.bearing, world.rows, self.settings.vision.geolocate_range)
            if cell is not None:
                self.db.observe(cell, ev.estimates, world.time)

    def sync_metrics(self) -> Metrics:
        self.metrics.pollinated = len(self.db.pollinated)
        self.metrics.attempted = self.db.attempted
        return self.metrics


def tick(mission: Mission, world: World, dt: float) -> tuple[Mission, World]:
    """One control period of the current phase."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    cmd = None
    for _ in range(MAX_INSTANT_TRANSITIONS):
        if mission.done:
            mission.sync_metrics()
            return mission, world
        world, cmd = Mission._HANDLERS[mission.phase](mission, world)
        if cmd is not None:
            break
    world = mission._advance(world, cmd if cmd is not None else (0.0, 0.0), dt)
    mission.sync_metrics()
    return mission, world


def run_mission(
    world: World, settings: Settings = Settings(), seed: Optional[int] = None, max_time: Optional[float] = None
) -> tuple[Mission, World]:
    """Tick until Done or the time budget runs out."""
    mission = Mission(world, settings, seed)
    limit = settings.mission.max_time if max_time is None else max_time
    dt = settings.mission.dt
    while not mission.done and world.time < limit - 1e-9:
        mission, world = tick(mission, world, dt)
    mission.sync_metrics()
    return mission, world

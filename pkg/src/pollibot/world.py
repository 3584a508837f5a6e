"""Ground-truth greenhouse: rows, grid cells, flower phenology, robot motion and
the simulated sensor channels (odometry, planar lidar, long-range camera).

All randomness is drawn from an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import GeometryError, OutOfRow
from .geometry import (
    Pose2,
    points_segments_distance,
    ray_segment_distances,
    relative_pose,
    sample_segments,
    segment_distance,
)

ARC_EPS = 1e-9


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> float:
        return 1.0 if self is Side.LEFT else -1.0


class FlowerState(str, enum.Enum):
    BUD = "bud"
    READY = "ready"
    POLLINATED = "pollinated"
    WILTED = "wilted"


@dataclass(frozen=True)
class OdomNoise:
    sigma_trans: float = 0.02
    sigma_rot: float = 0.01


@dataclass(frozen=True)
class ScanSpec:
    beam_count: int = 360
    fov: float = 2.0 * math.pi
    max_range: float = 12.0
    sigma_range: float = 0.01


@dataclass(frozen=True)
class CameraSpec:
    fov: float = 3.0
    reliable_range: float = 2.5
    detect_prob: float = 0.9
    false_positive_rate: float = 0.0
    height: float = 1.0
    sigma_bearing: float = 0.005
    sigma_ready: float = 2.0
    period: float = 0.5


@dataclass(frozen=True)
class RobotSpec:
    radius: float = 0.25
    v_max: float = 1.0
    omega_max: float = 2.0


@dataclass(frozen=True)
class PlantRow:
    """A plant row: rectangle around a centerline, split into cells on both sides.

    Left is the +90 degree side of the centerline direction.
    """

    id: str
    start: tuple[float, float]
    heading: float = 0.0
    length: float = 3.44
    half_width: float = 0.3
    cells_per_side: int = 5

    @property
    def cell_length(self) -> float:
        return self.length / self.cells_per_side

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.heading), math.cos(self.heading)])

    @property
    def end(self) -> tuple[float, float]:
        p = np.asarray(self.start, float) + self.length * self.direction
        return (float(p[0]), float(p[1]))

    def point_at(self, arclength: float, lateral: float = 0.0) -> np.ndarray:
        return np.asarray(self.start, float) + arclength * self.direction + lateral * self.normal

    def to_row_frame(self, points) -> tuple[np.ndarray, np.ndarray]:
        """(arclength, signed lateral offset) of (N, 2) points."""
        rel = np.asarray(points, float).reshape(-1, 2) - np.asarray(self.start, float)
        return rel @ self.direction, rel @ self.normal

    def corners(self) -> np.ndarray:
        hw = self.half_width
        return np.array([
            self.point_at(0.0, -hw),
            self.point_at(self.length, -hw),
            self.point_at(self.length, hw),
            self.point_at(0.0, hw),
        ])

    def segments(self) -> np.ndarray:
        c = self.corners()
        return np.hstack([c, np.roll(c, -1, axis=0)])

    def face_segment(self, side: Side) -> np.ndarray:
        lat = side.sign * self.half_width
        return np.concatenate([self.point_at(0.0, lat), self.point_at(self.length, lat)])

    def cell_interval(self, index: int) -> tuple[float, float]:
        return index * self.cell_length, (index + 1) * self.cell_length


@dataclass(frozen=True, order=True)
class GridCellRef:
    row_id: str
    side: Side
    index: int

    def key(self) -> str:
        return f"{self.row_id}/{self.side.value}/{self.index}"


@dataclass(frozen=True)
class FlowerSpec:
    id: str
    row: str
    side: Side
    arclength: float
    height: float = 0.55
    ready_time: float = 0.0
    wilt_time: float = 1.0e9


@dataclass(frozen=True)
class Flower:
    id: str
    position: tuple[float, float, float]
    cell: GridCellRef
    ready_time: float
    wilt_time: float
    state: FlowerState = FlowerState.BUD
    pistil_coverage: float = 0.0
    pollinated_time: Optional[float] = None


@dataclass(frozen=True)
class RobotState:
    pose: Pose2
    v: float = 0.0
    omega: float = 0.0
    time: float = 0.0


@dataclass(frozen=True)
class WorldConfig:
    room_width: float
    room_length: float
    rows: tuple[PlantRow, ...] = ()
    flowers: tuple[FlowerSpec, ...] = ()
    seed: int = 0
    odom_noise: OdomNoise = OdomNoise()
    scan_spec: ScanSpec = ScanSpec()
    camera_spec: CameraSpec = CameraSpec()
    robot: RobotSpec = RobotSpec()
    robot_start: tuple[float, float, float] = (1.0, 1.0, 0.0)
    d_park: float = 0.75
    walls: Optional[tuple[tuple[float, float, float, float], ...]] = None


@dataclass(frozen=True)
class DetectionEvent:
    """Camera-frame unit bearing (forward, left, up) to a detected cluster.

    ``estimates`` holds one (ready time, wilt time) guess per unpollinated
    flower seen in the cluster.
    """

    bearing: np.ndarray
    estimates: tuple[tuple[float, float], ...] = ()

    @property
    def count(self) -> int:
        return len(self.estimates)


@dataclass(frozen=True, eq=False)
class World:
    config: WorldConfig
    rows: tuple[PlantRow, ...]
    wall_segments: np.ndarray
    segments: np.ndarray
    flowers: tuple[Flower, ...]
    robot: RobotState
    collided: bool = False
    cells: tuple[GridCellRef, ...] = ()
    cell_members: dict = field(default_factory=dict)
    flower_index: dict = field(default_factory=dict)

    @property
    def time(self) -> float:
        return self.robot.time

    def row(self, row_id: str) -> PlantRow:
        for r in self.rows:
            if r.id == row_id:
                return r
        raise KeyError(row_id)

    def flower(self, flower_id: str) -> Flower:
        return self.flowers[self.flower_index[flower_id]]

    def flowers_in(self, cell: GridCellRef) -> list[Flower]:
        return [self.flowers[i] for i in self.cell_members.get(cell, ())]

    def with_flower(self, flower: Flower) -> "World":
        flowers = list(self.flowers)
        flowers[self.flower_index[flower.id]] = flower
        return replace(self, flowers=tuple(flowers))


def _default_walls(w: float, l: float) -> np.ndarray:
    return np.array([
        [0.0, 0.0, w, 0.0],
        [w, 0.0, w, l],
        [w, l, 0.0, l],
        [0.0, l, 0.0, 0.0],
    ])


def validate_config(config: WorldConfig) -> None:
    if not (config.room_width > 0 and config.room_length > 0):
        raise GeometryError("room dimensions must be positive")
    diameter = 2.0 * config.robot.radius
    ids = set()
    for row in config.rows:
        if row.id in ids:
            raise GeometryError(f"duplicate row id {row.id!r}")
        ids.add(row.id)
        if row.length <= 0 or row.half_width <= 0 or row.cells_per_side < 1:
            raise GeometryError(f"row {row.id!r} has non-positive dimensions")
        c = row.corners()
        inside = (
            (c[:, 0] > 0).all() and (c[:, 0] < config.room_width).all()
            and (c[:, 1] > 0).all() and (c[:, 1] < config.room_length).all()
        )
        if not inside:
            raise GeometryError(f"row {row.id!r} is not strictly inside the room")
        wall_gap = min(
            c[:, 0].min(), c[:, 1].min(),
            config.room_width - c[:, 0].max(), config.room_length - c[:, 1].max(),
        )
        if wall_gap < diameter:
            raise GeometryError(
                f"row {row.id!r} leaves a {wall_gap:.3f} m corridor to the wall, "
                f"narrower than the robot diameter {diameter:.3f} m"
            )
    rows = list(config.rows)
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            gap = min(segment_distance(s, t) for s in a.segments() for t in b.segments())
            if _rect_overlap(a, b):
                gap = 0.0
            if gap < diameter:
                raise GeometryError(
                    f"rows {a.id!r} and {b.id!r} leave a {gap:.3f} m corridor, "
                    f"narrower than the robot diameter {diameter:.3f} m"
                )
    seen = set()
    for f in config.flowers:
        if f.id in seen:
            raise GeometryError(f"duplicate flower id {f.id!r}")
        seen.add(f.id)
        if f.row not in ids:
            raise GeometryError(f"flower {f.id!r} references unknown row {f.row!r}")
        if not f.ready_time < f.wilt_time:
            raise GeometryError(f"flower {f.id!r} must have ready_time < wilt_time")


def _rect_overlap(a: PlantRow, b: PlantRow) -> bool:
    # centre containment catches a rectangle fully inside another
    for p, q in ((a, b), (b, a)):
        s, u = q.to_row_frame(p.point_at(p.length / 2)[None, :])
        if 0 <= s[0] <= q.length and abs(u[0]) <= q.half_width:
            return True
    return False


def grid_cell_of(row: PlantRow, side: Side, arclength: float) -> int:
    """Index of the cell holding ``arclength``; the far boundary belongs to the last cell."""
    if not (-ARC_EPS <= arclength <= row.length + ARC_EPS):
        raise OutOfRow(f"arclength {arclength} outside row {row.id!r} [0, {row.length}]")
    idx = int(math.floor(max(arclength, 0.0) / row.cell_length))
    return min(idx, row.cells_per_side - 1)


def _phenology(flower: Flower, time: float) -> Flower:
    state = flower.state
    if state is FlowerState.BUD and time >= flower.ready_time:
        state = FlowerState.READY
    if state is FlowerState.READY and time >= flower.wilt_time:
        state = FlowerState.WILTED
    if state is flower.state:
        return flower
    return replace(flower, state=state)


def build_world(config: WorldConfig) -> World:
    validate_config(config)
    rows = tuple(config.rows)
    walls = (
        _default_walls(config.room_width, config.room_length)
        if config.walls is None
        else np.asarray(config.walls, float).reshape(-1, 4)
    )
    segs = [walls] + [r.segments() for r in rows]
    segments = np.vstack(segs) if segs else np.zeros((0, 4))

    cells = tuple(
        GridCellRef(r.id, side, i)
        for r in rows for side in (Side.LEFT, Side.RIGHT) for i in range(r.cells_per_side)
    )
    by_id = {r.id: r for r in rows}
    flowers = []
    cell_flowers: dict = {c: [] for c in cells}
    index = {}
    for spec in config.flowers:
        row = by_id[spec.row]
        side = Side(spec.side)
        idx = grid_cell_of(row, side, spec.arclength)
        xy = row.point_at(spec.arclength, side.sign * row.half_width)
        cell = GridCellRef(row.id, side, idx)
        fl = Flower(
            id=spec.id,
            position=(float(xy[0]), float(xy[1]), float(spec.height)),
            cell=cell,
            ready_time=float(spec.ready_time),
            wilt_time=float(spec.wilt_time),
        )
        index[spec.id] = len(flowers)
        cell_flowers[cell].append(len(flowers))
        flowers.append(_phenology(fl, 0.0))

    start = Pose2(*config.robot_start)
    world = World(
        config=config,
        rows=rows,
        wall_segments=walls,
        segments=segments,
        flowers=tuple(flowers),
        robot=RobotState(pose=start),
        cells=cells,
        cell_members={c: tuple(v) for c, v in cell_flowers.items()},
        flower_index=index,
    )
    if _in_collision(world, start):
        raise GeometryError("robot start pose collides with the room geometry")
    return world


def _in_collision(world: World, pose: Pose2) -> bool:
    d = points_segments_distance(pose.position[None, :], world.segments)[0]
    return bool(d < world.config.robot.radius)


def integrate_unicycle(pose: Pose2, v: float, omega: float, dt: float) -> Pose2:
    """Exact arc for |omega| > eps, straight line otherwise."""
    th = pose.theta
    if abs(omega) > 1e-9:
        r = v / omega
        th1 = th + omega * dt
        return Pose2(
            pose.x + r * (math.sin(th1) - math.sin(th)),
            pose.y - r * (math.cos(th1) - math.cos(th)),
            th1,
        )
    return Pose2(pose.x + v * dt * math.cos(th), pose.y + v * dt * math.sin(th), th)


def step(world: World, v_cmd: float, omega_cmd: float, dt: float) -> World:
    if dt <= 0:
        raise ValueError("dt must be positive")
    spec = world.config.robot
    v = min(max(v_cmd, -spec.v_max), spec.v_max)
    omega = min(max(omega_cmd, -spec.omega_max), spec.omega_max)
    pose = integrate_unicycle(world.robot.pose, v, omega, dt)
    t = world.robot.time + dt
    flowers = tuple(_phenology(f, t) for f in world.flowers)
    return replace(
        world,
        robot=RobotState(pose=pose, v=v, omega=omega, time=t),
        flowers=flowers,
        collided=_in_collision(world, pose),
    )


def parking_pose(world: World, cell: GridCellRef) -> Pose2:
    """Pose ``d_park`` off the centerline at the cell midpoint, facing the row."""
    row = world.row(cell.row_id)
    s = (cell.index + 0.5) * row.cell_length
    lateral = cell.side.sign * world.config.d_park
    p = row.point_at(s, lateral)
    facing = -cell.side.sign * row.normal
    return Pose2(p[0], p[1], math.atan2(facing[1], facing[0]))


def cell_corners(world: World, cell: GridCellRef) -> np.ndarray:
    """The two ends of the cell's stretch of row face."""
    row = world.row(cell.row_id)
    s0, s1 = row.cell_interval(cell.index)
    lat = cell.side.sign * row.half_width
    return np.array([row.point_at(s0, lat), row.point_at(s1, lat)])


def simulate_odometry(prev: Pose2, curr: Pose2, noise: OdomNoise, rng: np.random.Generator) -> Pose2:
    rel = relative_pose(prev, curr)
    n = rng.standard_normal(3)
    return Pose2(
        rel.x + noise.sigma_trans * n[0],
        rel.y + noise.sigma_trans * n[1],
        rel.theta + noise.sigma_rot * n[2],
    )


def scan_bearings(spec: ScanSpec) -> np.ndarray:
    if spec.fov >= 2.0 * math.pi - 1e-9:
        return np.linspace(-math.pi, math.pi, spec.beam_count, endpoint=False)
    return np.linspace(-spec.fov / 2.0, spec.fov / 2.0, spec.beam_count)


def simulate_scan(world: World, pose: Pose2, spec: ScanSpec, rng: np.random.Generator) -> np.ndarray:
    angles = scan_bearings(spec) + pose.theta
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    dist = ray_segment_distances(pose.position, dirs, world.segments).min(axis=1) if len(world.segments) else np.full(len(dirs), np.inf)
    noise = spec.sigma_range * rng.standard_normal(len(dirs))
    hit = dist < spec.max_range
    return np.where(hit, np.minimum(dist + noise, spec.max_range), spec.max_range)


def scan_to_points(ranges, spec: ScanSpec) -> np.ndarray:
    """Robot-frame points of the beams that hit something."""
    ranges = np.asarray(ranges, float)
    b = scan_bearings(spec)
    keep = ranges < spec.max_range
    return np.column_stack([ranges[keep] * np.cos(b[keep]), ranges[keep] * np.sin(b[keep])])


def _visible(world: World, origin: np.ndarray, target: np.ndarray) -> bool:
    delta = target - origin
    d = float(np.hypot(*delta))
    if d < 1e-12:
        return True
    hits = ray_segment_distances(origin, (delta / d)[None, :], world.segments)[0]
    return bool(hits.min() >= d - 1e-6)


def simulate_cluster_detections(
    world: World, pose: Pose2, camera_spec: CameraSpec, rng: np.random.Generator
) -> list[DetectionEvent]:
    cam = np.array([pose.x, pose.y, camera_spec.height])
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    t = world.time
    events = []
    for cell in world.cells:
        members = [f for f in world.flowers_in(cell) if f.state is not FlowerState.WILTED]
        if not members:
            continue
        centroid = np.mean([f.position for f in members], axis=0)
        rel = centroid - cam
        dist = float(np.linalg.norm(rel))
        if dist > camera_spec.reliable_range or dist < 1e-9:
            continue
        local = np.array([c * rel[0] + s * rel[1], -s * rel[0] + c * rel[1], rel[2]])
        az = math.atan2(local[1], local[0])
        if abs(az) > camera_spec.fov / 2.0:
            continue
        if not _visible(world, cam[:2], centroid[:2]):
            continue
        if rng.random() >= camera_spec.detect_prob:
            continue
        el = math.atan2(local[2], math.hypot(local[0], local[1]))
        n = rng.standard_normal(2) * camera_spec.sigma_bearing
        estimates = []
        for f in members:
            if f.state in (FlowerState.BUD, FlowerState.READY):
                e = rng.standard_normal(2) * camera_spec.sigma_ready
                estimates.append((f.ready_time + e[0], f.wilt_time + e[1]))
        events.append(DetectionEvent(_unit(az + n[0], el + n[1]), tuple(estimates)))
    for _ in range(int(rng.poisson(camera_spec.false_positive_rate))):
        az = rng.uniform(-camera_spec.fov / 2.0, camera_spec.fov / 2.0)
        el = rng.uniform(-0.8, 0.0)
        events.append(DetectionEvent(_unit(az, el), ((t, t + 600.0),)))
    return events


def _unit(azimuth: float, elevation: float) -> np.ndarray:
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def prior_map(world: World, spacing: float = 0.02) -> np.ndarray:
    """Outline point cloud of the known room geometry (walls and row outlines)."""
    return sample_segments(world.segments, spacing)


def solid_map(world: World, spacing: float) -> np.ndarray:
    """Prior map with row interiors filled and walls thickened outwards by two samples."""
    pts = [prior_map(world, spacing / 2.0)]
    for row in world.rows:
        s = np.arange(0.0, row.length + 1e-9, spacing / 2.0)
        u = np.arange(-row.half_width, row.half_width + 1e-9, spacing / 2.0)
        ss, uu = np.meshgrid(s, u)
        rel = ss.reshape(-1, 1) * row.direction + uu.reshape(-1, 1) * row.normal
        pts.append(rel + np.asarray(row.start))
    if world.config.walls is None:
        w, l = world.config.room_width, world.config.room_length
        for k in range(1, 5):
            off = k * spacing / 2.0
            pts.append(sample_segments(_default_walls(w, l) + np.array([
                [-off, -off, off, -off],
                [off, -off, off, off],
                [off, off, -off, off],
                [-off, off, -off, -off],
            ]), spacing / 2.0))
    return np.vstack(pts)

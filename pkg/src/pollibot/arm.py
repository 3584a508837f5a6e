"""Planar 3R arm: kinematics, joint-space sequencing of flower targets,
simulated two-regime visual servoing and the brush-stroke pollination model.

The arm works in the vertical plane that contains the base and the target;
a target's plane coordinates are its horizontal distance from the base and
its height above the base.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import PollibotError
from .geometry import Pose2
from .world import Flower, FlowerState, GridCellRef, World


class Unreachable(PollibotError):
    pass


class NoConvergence(PollibotError):
    pass


class TooManyTargets(PollibotError):
    pass


class NotReady(PollibotError):
    pass


EXACT_LIMIT = 9


@dataclass(frozen=True)
class ArmSpec:
    lengths: tuple[float, float, float] = (0.28, 0.28, 0.15)
    limits: tuple[tuple[float, float], ...] = ((-math.pi, math.pi),) * 3
    mount: tuple[float, float, float] = (0.0, 0.0, 0.55)  # x, y in the robot frame, height

    def __post_init__(self):
        if len(self.lengths) != 3 or min(self.lengths) <= 0:
            raise ValueError("three positive link lengths are required")
        if len(self.limits) != 3 or any(lo >= hi for lo, hi in self.limits):
            raise ValueError("each joint needs lo < hi limits")

    @property
    def reach(self) -> float:
        return float(sum(self.lengths))

    def base_position(self, robot: Pose2) -> np.ndarray:
        xy = robot.transform_points(np.array(self.mount[:2]))[0]
        return np.array([xy[0], xy[1], self.mount[2]])


@dataclass(frozen=True)
class JointConfig:
    q1: float
    q2: float
    q3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3])

    @classmethod
    def from_array(cls, q) -> "JointConfig":
        return cls(float(q[0]), float(q[1]), float(q[2]))


ZERO = JointConfig(0.0, 0.0, 0.0)


def within_limits(arm: ArmSpec, q: JointConfig, tol: float = 1e-12) -> bool:
    return all(lo - tol <= v <= hi + tol for v, (lo, hi) in zip(q.as_array(), arm.limits))


def fk(arm: ArmSpec, q: JointConfig) -> tuple[float, float, float]:
    """Tip (x, y, orientation) in the arm plane."""
    a = np.cumsum(q.as_array())
    l = np.asarray(arm.lengths)
    return float(l @ np.cos(a)), float(l @ np.sin(a)), float(a[-1])


def ik(
    arm: ArmSpec,
    target,
    seed: JointConfig = ZERO,
    orientation: Optional[float] = None,
    tol: float = 1e-4,
    max_iters: int = 200,
    damping: float = 0.05,
    restarts: int = 4,
) -> JointConfig:
    """Damped least squares from ``seed`` (then a few fixed restarts) until
    the tip is within ``tol`` of ``target``; joint limits are enforced by
    clipping after every step. ``orientation`` adds the tip angle as a third
    task row."""
    t = np.asarray(target, float).reshape(2)
    if math.hypot(*t) > arm.reach + 1e-12:
        raise Unreachable(f"target at {math.hypot(*t):.3f} m is beyond reach {arm.reach:.3f} m")
    l = np.asarray(arm.lengths)
    lo = np.array([b[0] for b in arm.limits])
    hi = np.array([b[1] for b in arm.limits])
    seeds = [seed.as_array()] + _fold_seeds(l, t)[:restarts]
    lam2 = damping**2
    for q0 in seeds:
        q = _dls(l, t, np.clip(q0.astype(float), lo, hi), orientation, tol, max_iters, lam2, lo, hi)
        if q is not None:
            return JointConfig.from_array(q)
    raise NoConvergence(f"no joint solution within {tol} m after {max_iters} iterations per seed")


def _dls(l, t, q, orientation, tol, max_iters, lam2, lo, hi):
    """Damped least-squares iterations from ``q``; None if they do not converge."""
    l1, l2, l3 = (float(v) for v in l)
    tx, ty = float(t[0]), float(t[1])
    q = [float(v) for v in q]
    for it in range(max_iters + 1):
        a1 = q[0]
        a2 = a1 + q[1]
        a3 = a2 + q[2]
        c1, c2, c3 = l1 * math.cos(a1), l2 * math.cos(a2), l3 * math.cos(a3)
        s1, s2, s3 = l1 * math.sin(a1), l2 * math.sin(a2), l3 * math.sin(a3)
        ex, ey = tx - (c1 + c2 + c3), ty - (s1 + s2 + s3)
        eo = 0.0 if orientation is None else math.remainder(orientation - a3, 2 * math.pi)
        if math.hypot(ex, ey) < tol and abs(eo) < tol:
            return q
        if it == max_iters:
            return None
        jx = (-(s1 + s2 + s3), -(s2 + s3), -s3)
        jy = (c1 + c2 + c3, c2 + c3, c3)
        if orientation is None:
            # (J J^T + lam2 I) y = e in closed form
            a = jx[0] ** 2 + jx[1] ** 2 + jx[2] ** 2 + lam2
            b = jx[0] * jy[0] + jx[1] * jy[1] + jx[2] * jy[2]
            d = jy[0] ** 2 + jy[1] ** 2 + jy[2] ** 2 + lam2
            det = a * d - b * b
            yx = (d * ex - b * ey) / det
            yy = (a * ey - b * ex) / det
            step = [jx[k] * yx + jy[k] * yy for k in range(3)]
        else:
            j = np.array([jx, jy, (1.0, 1.0, 1.0)])
            step = list(j.T @ np.linalg.solve(j @ j.T + lam2 * np.eye(3), np.array([ex, ey, eo])))
        q = [min(max(q[k] + step[k], lo[k]), hi[k]) for k in range(3)]
    return None


def _fold_seeds(l: np.ndarray, t: np.ndarray) -> list[np.ndarray]:
    """Two-link solutions (the last link held straight, then the first two
    held straight) for both elbow signs; exact whenever the fold exists."""
    r, phi = math.hypot(*t), math.atan2(t[1], t[0])
    out = []
    for a, b, mid in ((l[0], l[1] + l[2], 0), (l[0] + l[1], l[2], 1)):
        c = (r * r - a * a - b * b) / (2 * a * b)
        if abs(c) > 1:
            continue
        for sign in (1.0, -1.0):
            elbow = sign * math.acos(c)
            q1 = math.remainder(phi - math.atan2(b * math.sin(elbow), a + b * math.cos(elbow)), 2 * math.pi)
            q = [q1, elbow, 0.0] if mid == 0 else [q1, 0.0, elbow]
            out.append(np.array(q))
    out.append(np.array([math.remainder(phi + 0.5, 2 * math.pi), -1.0, -1.0]))
    return out


@dataclass(frozen=True)
class FlowerTarget:
    flower_id: str
    position: tuple[float, float, float]
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


def plane_coordinates(arm: ArmSpec, robot: Pose2, point) -> np.ndarray:
    """(horizontal distance, height above base) of a 3D point."""
    base = arm.base_position(robot)
    d = np.asarray(point, float) - base
    return np.array([math.hypot(d[0], d[1]), d[2]])


def survey_workspace(
    world: World,
    cell: GridCellRef,
    sigma_far: float,
    rng: np.random.Generator,
    arm: ArmSpec = ArmSpec(),
    robot: Optional[Pose2] = None,
) -> list[FlowerTarget]:
    """Ready flowers of ``cell`` within reach of the arm base, with Gaussian
    position noise of ``sigma_far`` per axis."""
    if sigma_far < 0:
        raise ValueError("sigma_far must be non-negative")
    pose = world.robot.pose if robot is None else robot
    base = arm.base_position(pose)
    out = []
    for f in world.flowers_in(cell):
        if f.state is not FlowerState.READY:
            continue
        p = np.asarray(f.position, float)
        if np.linalg.norm(p - base) > arm.reach:
            continue
        est = p + sigma_far * rng.standard_normal(3) if sigma_far > 0 else p
        out.append(FlowerTarget(f.id, tuple(float(v) for v in est), sigma_far))
    return out


@dataclass(frozen=True)
class SequencePlan:
    order: tuple[int, ...]
    configs: tuple[JointConfig, ...]  # per target, in input order
    cost: float


def joint_distance(a: JointConfig, b: JointConfig) -> float:
    return float(np.linalg.norm(a.as_array() - b.as_array()))


def target_configs(targets: Sequence[FlowerTarget], arm: ArmSpec, q_start: JointConfig, robot: Pose2) -> list[JointConfig]:
    return [ik(arm, plane_coordinates(arm, robot, t.position), q_start) for t in targets]


def _cost_matrix(q_start: JointConfig, configs: Sequence[JointConfig]) -> np.ndarray:
    q = np.vstack([q_start.as_array()] + [c.as_array() for c in configs])
    return np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)


def order_exact(q_start: JointConfig, configs: Sequence[JointConfig]) -> tuple[tuple[int, ...], float]:
    """Cheapest visiting order over all n! permutations (first in lexicographic
    order on ties)."""
    n = len(configs)
    if n > EXACT_LIMIT:
        raise TooManyTargets(f"{n} targets exceed the exhaustive limit of {EXACT_LIMIT}")
    if n == 0:
        return (), 0.0
    d = _cost_matrix(q_start, configs)
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)
    cost = d[0, perms[:, 0]].copy()
    for k in range(1, n):
        cost += d[perms[:, k - 1], perms[:, k]]
    best = int(np.argmin(cost))
    return tuple(int(i) - 1 for i in perms[best]), float(cost[best])


def order_nn(q_start: JointConfig, configs: Sequence[JointConfig]) -> tuple[tuple[int, ...], float]:
    """Nearest unvisited configuration next; lowest index on ties."""
    d = _cost_matrix(q_start, configs)
    left = list(range(1, len(configs) + 1))
    cur, order, total = 0, [], 0.0
    while left:
        nxt = min(left, key=lambda j: (d[cur, j], j))
        total += float(d[cur, nxt])
        order.append(nxt - 1)
        left.remove(nxt)
        cur = nxt
    return tuple(order), total


def plan_sequence_exact(targets, arm: ArmSpec, q_start: JointConfig = ZERO, robot: Pose2 = Pose2()) -> SequencePlan:
    if len(targets) > EXACT_LIMIT:
        raise TooManyTargets(f"{len(targets)} targets exceed the exhaustive limit of {EXACT_LIMIT}")
    configs = target_configs(targets, arm, q_start, robot)
    order, cost = order_exact(q_start, configs)
    return SequencePlan(order, tuple(configs), cost)


def plan_sequence_nn(targets, arm: ArmSpec, q_start: JointConfig = ZERO, robot: Pose2 = Pose2()) -> SequencePlan:
    configs = target_configs(targets, arm, q_start, robot)
    order, cost = order_nn(q_start, configs)
    return SequencePlan(order, tuple(configs), cost)


class Regime(str, enum.Enum):
    DEPTH_CAMERA = "depth_camera"
    ENDOSCOPE = "endoscope"


SWITCH_DISTANCE = 0.18


@dataclass(frozen=True)
class ServoParams:
    alpha: float = 0.5
    sigma0: float = 0.005
    sigma_endo: float = 0.0005
    tol: float = 0.005

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if min(self.sigma0, self.sigma_endo) < 0 or self.tol <= 0:
            raise ValueError("noise scales must be non-negative and tol positive")


@dataclass(frozen=True)
class ServoState:
    tip: tuple[float, float, float]
    estimate: tuple[float, float, float]
    regime: Regime = Regime.DEPTH_CAMERA
    converged: bool = False

    @classmethod
    def start(cls, tip, estimate) -> "ServoState":
        tip = tuple(float(v) for v in tip)
        estimate = tuple(float(v) for v in estimate)
        return cls(tip, estimate, regime_for(tip, estimate))


def regime_for(tip, estimate) -> Regime:
    d = float(np.linalg.norm(np.subtract(tip, estimate)))
    return Regime.ENDOSCOPE if d < SWITCH_DISTANCE else Regime.DEPTH_CAMERA


def servo_step(state: ServoState, true_flower, params: ServoParams, rng: np.random.Generator) -> ServoState:
    """Re-estimate the flower (noise grows with range under the depth camera,
    constant under the endoscope) and move the tip a fraction alpha toward it."""
    tip = np.asarray(state.tip, float)
    truth = np.asarray(true_flower, float)
    d = float(np.linalg.norm(tip - truth))
    sigma = params.sigma_endo if state.regime is Regime.ENDOSCOPE else params.sigma0 * d
    est = truth + sigma * rng.standard_normal(3) if sigma > 0 else truth.copy()
    tip = tip + params.alpha * (est - tip)
    tip_t, est_t = tuple(float(v) for v in tip), tuple(float(v) for v in est)
    return ServoState(tip_t, est_t, regime_for(tip_t, est_t), float(np.linalg.norm(tip - truth)) <= params.tol)


def servo_bound(d0: float, params: ServoParams) -> int:
    """Noise-free step count plus five."""
    if d0 <= params.tol:
        return 5
    if params.alpha >= 1:
        return 6
    return int(math.ceil(math.log(d0 / params.tol) / math.log(1.0 / (1.0 - params.alpha)))) + 5


@dataclass(frozen=True)
class EndEffectorState:
    extensions: tuple[float, float, float] = (0.0, 0.0, 0.0)
    coverage: dict = field(default_factory=dict)  # flower id -> pistil coverage

    def coverage_of(self, flower_id: str) -> float:
        return self.coverage.get(flower_id, 0.0)


def pollinate(
    effector: EndEffectorState,
    flower: Flower,
    strokes: int,
    delta: float = 0.3,
    threshold: float = 0.8,
    time: Optional[float] = None,
) -> tuple[EndEffectorState, Flower]:
    """Brush strokes each add ``delta`` pistil coverage (capped at 1); at
    ``threshold`` the flower counts as pollinated."""
    if flower.state is not FlowerState.READY:
        raise NotReady(f"flower {flower.id} is {flower.state.value}, not ready")
    if strokes < 0 or delta < 0:
        raise ValueError("strokes and delta must be non-negative")
    cov = max(effector.coverage_of(flower.id), flower.pistil_coverage)
    for _ in range(strokes):
        cov = min(1.0, cov + delta)
    coverage = dict(effector.coverage)
    coverage[flower.id] = cov
    # every stroke ends retracted
    eff = EndEffectorState((0.0, 0.0, 0.0), coverage)
    if cov >= threshold:
        flower = replace(flower, state=FlowerState.POLLINATED, pistil_coverage=cov, pollinated_time=time)
    else:
        flower = replace(flower, pistil_coverage=cov)
    return eff, flower

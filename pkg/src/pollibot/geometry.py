"""SE(2) poses and small planar-geometry helpers shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    if isinstance(theta, np.ndarray):
        return math.pi - np.mod(math.pi - theta, TWO_PI)
    return math.pi - (math.pi - theta) % TWO_PI


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", float(wrap_angle(float(self.theta))))

    @classmethod
    def from_array(cls, a) -> "Pose2":
        return cls(a[0], a[1], a[2])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def compose(self, other: "Pose2") -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def __matmul__(self, other: "Pose2") -> "Pose2":
        return self.compose(other)

    def transform_points(self, pts) -> np.ndarray:
        """Map an (N, 2) array of points from this pose's frame into the parent frame."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, -s], [s, c]])
        return pts @ rot.T + np.array([self.x, self.y])

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


IDENTITY = Pose2()


def pose_compose(a: Pose2, b: Pose2) -> Pose2:
    return a.compose(b)


def pose_inverse(a: Pose2) -> Pose2:
    return a.inverse()


def relative_pose(a: Pose2, b: Pose2) -> Pose2:
    """inverse(a) o b."""
    return a.inverse().compose(b)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def ray_segment_distances(origin, directions, segments) -> np.ndarray:
    """Distance along each ray to each segment.

    ``directions`` is (B, 2) of unit vectors, ``segments`` is (S, 4) rows of
    ``x0, y0, x1, y1``. Returns a (B, S) array with ``inf`` where a ray misses.
    """
    origin = np.asarray(origin, dtype=float)
    d = np.asarray(directions, dtype=float).reshape(-1, 2)
    seg = np.asarray(segments, dtype=float).reshape(-1, 4)
    a = seg[:, :2]
    e = seg[:, 2:] - a
    ap = a - origin
    denom = cross2(d[:, None, :], e[None, :, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross2(ap[None, :, :], e[None, :, :]) / denom
        u = cross2(ap[None, :, :], d[:, None, :]) / denom
    hit = (np.abs(denom) > 1e-15) & (t >= 0.0) & (u >= -1e-12) & (u <= 1.0 + 1e-12)
    return np.where(hit, t, np.inf)


def point_segment_distance(p, seg) -> float:
    p = np.asarray(p, dtype=float)
    a = np.asarray(seg[:2], dtype=float)
    b = np.asarray(seg[2:], dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.linalg.norm(p - (a + t * ab)))


def points_segments_distance(points, segments) -> np.ndarray:
    """Distance from each of (N, 2) points to the nearest of (S, 4) segments."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    seg = np.asarray(segments, dtype=float).reshape(-1, 4)
    if len(seg) == 0:
        return np.full(len(p), np.inf)
    a = seg[:, :2]
    ab = seg[:, 2:] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    ap = p[:, None, :] - a[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("nsj,sj->ns", ap, ab) / denom
    t = np.clip(np.nan_to_num(t), 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.linalg.norm(p[:, None, :] - closest, axis=2).min(axis=1)


def segments_intersect(s1, s2) -> bool:
    p, r = np.asarray(s1[:2], float), np.asarray(s1[2:], float) - np.asarray(s1[:2], float)
    q, s = np.asarray(s2[:2], float), np.asarray(s2[2:], float) - np.asarray(s2[:2], float)
    denom = float(cross2(r, s))
    qp = q - p
    if abs(denom) < 1e-15:
        return False
    t = float(cross2(qp, s)) / denom
    u = float(cross2(qp, r)) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def segment_distance(s1, s2) -> float:
    if segments_intersect(s1, s2):
        return 0.0
    return min(
        point_segment_distance(s1[:2], s2),
        point_segment_distance(s1[2:], s2),
        point_segment_distance(s2[:2], s1),
        point_segment_distance(s2[2:], s1),
    )


def sample_segments(segments, spacing: float) -> np.ndarray:
    """Points spaced at most ``spacing`` apart along each segment, endpoints included."""
    out = []
    for x0, y0, x1, y1 in np.asarray(segments, dtype=float).reshape(-1, 4):
        n = max(1, int(math.ceil(math.hypot(x1 - x0, y1 - y0) / spacing)))
        t = np.linspace(0.0, 1.0, n + 1)
        out.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
    if not out:
        return np.zeros((0, 2))
    return np.vstack(out)

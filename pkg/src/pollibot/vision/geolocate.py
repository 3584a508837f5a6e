"""Ray-based geolocation of detected clusters into row grid cells, and the
per-cell cluster-count map kept during the inspection pass."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from ..errors import PollibotError
from ..geometry import Pose2, ray_segment_distances
from ..world import GridCellRef, PlantRow, Side, grid_cell_of


class StaleObservation(PollibotError):
    pass


def camera_ray(camera_pose: Pose2, bearing) -> np.ndarray:
    """World-frame 3D direction of a camera-frame (forward, left, up) bearing."""
    b = np.asarray(bearing, float).reshape(3)
    c, s = math.cos(camera_pose.theta), math.sin(camera_pose.theta)
    return np.array([c * b[0] - s * b[1], s * b[0] + c * b[1], b[2]])


def bearing_to_cell(
    camera_pose: Pose2,
    bearing,
    rows: Iterable[PlantRow],
    max_range: float,
) -> Optional[GridCellRef]:
    """Cell whose row face the bearing ray strikes first, or None.

    The ray is tested in plan view against every row outline; hits on a row's
    end caps, and hits further than ``max_range`` along the 3D ray, give None.
    Camera height only enters through the bearing's elevation, which stretches
    the plan-view distance into a 3D range.
    """
    b = np.asarray(bearing, float).reshape(3)
    if abs(float(np.linalg.norm(b)) - 1.0) > 1e-9:
        raise ValueError("bearing must be a unit vector")
    d = camera_ray(camera_pose, b)
    horiz = math.hypot(d[0], d[1])
    if horiz < 1e-12:
        return None
    dir2 = d[:2] / horiz
    best = (math.inf, None)
    for row in rows:
        segs = row.segments()  # right face, far cap, left face, near cap
        t = ray_segment_distances(camera_pose.position, dir2[None, :], segs)[0]
        k = int(np.argmin(t))
        if t[k] < best[0]:
            best = (float(t[k]), (row, k))
    t, hit = best
    if hit is None or t / horiz > max_range:
        return None
    row, k = hit
    if k not in (0, 2):
        return None
    side = Side.RIGHT if k == 0 else Side.LEFT
    p = camera_pose.position + t * dir2
    s, _ = row.to_row_frame(p[None, :])
    arc = min(max(float(s[0]), 0.0), row.length)
    return GridCellRef(row.id, side, grid_cell_of(row, side, arc))


@dataclass(frozen=True)
class CellRecord:
    count: int = 0
    last_observed: float = -math.inf
    pollinated_count: int = 0
    ready: bool = False


@dataclass(frozen=True)
class CellFlowerMap:
    records: dict = field(default_factory=dict)
    pass_id: int = 0

    def get(self, cell: GridCellRef) -> CellRecord:
        return self.records.get(cell, CellRecord())

    def counts(self) -> dict:
        return {c: r.count for c, r in self.records.items()}


def update_cell_map(
    cmap: CellFlowerMap, cell: GridCellRef, detected_count: int, time: float, ready: Optional[bool] = None
) -> CellFlowerMap:
    """Keep the largest count seen for ``cell`` in the current pass."""
    if detected_count < 0:
        raise ValueError("detected_count must be non-negative")
    rec = cmap.get(cell)
    if time < rec.last_observed:
        raise StaleObservation(f"observation at t={time} precedes the last one at t={rec.last_observed} for {cell.key()}")
    rec = replace(
        rec,
        count=max(rec.count, int(detected_count)),
        last_observed=float(time),
        ready=rec.ready if ready is None else bool(ready),
    )
    records = dict(cmap.records)
    records[cell] = rec
    return replace(cmap, records=records)


def begin_pass(cmap: CellFlowerMap) -> CellFlowerMap:
    """Start a new inspection pass: stored counts go back to zero."""
    records = {c: replace(r, count=0) for c, r in cmap.records.items()}
    return CellFlowerMap(records, cmap.pass_id + 1)


def record_pollination(cmap: CellFlowerMap, cell: GridCellRef, n: int = 1) -> CellFlowerMap:
    rec = cmap.get(cell)
    records = dict(cmap.records)
    records[cell] = replace(rec, pollinated_count=rec.pollinated_count + n)
    return replace(cmap, records=records)

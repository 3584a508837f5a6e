from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from ..geometry import Pose2

FREE = 0
OCCUPIED = 1
UNKNOWN = -1


@dataclass(frozen=True)
class GridSpec:
    origin: Pose2
    resolution: float
    width: int
    height: int


@dataclass(eq=False)
class OccupancyGrid:
    """Row-major raster: ``values[iy, ix]``; cell (ix, iy) covers
    ``[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)`` in the origin frame."""

    origin: Pose2
    resolution: float
    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        self.values = np.asarray(self.values, dtype=np.int8).reshape(self.height, self.width)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.origin, self.resolution, self.width, self.height)

    def world_to_cell(self, points) -> tuple[np.ndarray, np.ndarray]:
        local = self.origin.inverse().transform_points(points)
        ij = np.floor(local / self.resolution).astype(np.int64)
        return ij[:, 0], ij[:, 1]

    def cell_center(self, ix, iy) -> np.ndarray:
        local = (np.column_stack([np.atleast_1d(ix), np.atleast_1d(iy)]) + 0.5) * self.resolution
        return self.origin.transform_points(local)

    def in_bounds(self, ix, iy):
        return (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)

    def is_free(self, cell: tuple[int, int]) -> bool:
        ix, iy = cell
        return bool(self.in_bounds(ix, iy) and self.values[iy, ix] == FREE)

    def blocked(self, points) -> np.ndarray:
        """True for points in non-free or out-of-bounds cells."""
        ix, iy = self.world_to_cell(points)
        inside = self.in_bounds(ix, iy)
        out = np.ones(len(ix), dtype=bool)
        out[inside] = self.values[iy[inside], ix[inside]] != FREE
        return out

    @cached_property
    def clearance(self) -> np.ndarray:
        """Metres from each cell centre to the nearest non-free cell centre
        (the grid border counts as an obstacle)."""
        free = np.pad(self.values == FREE, 1, constant_values=False)
        return ndimage.distance_transform_edt(free)[1:-1, 1:-1] * self.resolution

    def clearance_at(self, points) -> np.ndarray:
        ix, iy = self.world_to_cell(points)
        inside = self.in_bounds(ix, iy)
        out = np.zeros(len(ix))
        out[inside] = self.clearance[iy[inside], ix[inside]]
        return out


def rasterize(points, spec: GridSpec) -> OccupancyGrid:
    values = np.full((spec.height, spec.width), FREE, dtype=np.int8)
    grid = OccupancyGrid(spec.origin, spec.resolution, spec.width, spec.height, values)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts):
        ix, iy = grid.world_to_cell(pts)
        keep = grid.in_bounds(ix, iy)
        grid.values[iy[keep], ix[keep]] = OCCUPIED
    return grid


def disc_kernel(radius: float, resolution: float) -> np.ndarray:
    """Offsets whose cell square lies within ``radius`` of a cell centre."""
    n = int(math.ceil(radius / resolution + 0.5))
    d = np.arange(-n, n + 1)
    dx, dy = np.meshgrid(d, d)
    gap = np.hypot(np.maximum(np.abs(dx) - 0.5, 0.0), np.maximum(np.abs(dy) - 0.5, 0.0))
    return gap * resolution <= radius + 1e-12


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    if radius < 0:
        raise ValueError("radius must be non-negative")
    occ = grid.values == OCCUPIED
    grown = ndimage.binary_dilation(occ, structure=disc_kernel(radius, grid.resolution))
    values = grid.values.copy()
    values[grown & (grid.values == FREE)] = OCCUPIED
    return OccupancyGrid(grid.origin, grid.resolution, grid.width, grid.height, values)

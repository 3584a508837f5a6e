"""Occupancy grids rasterised from the known room geometry."""

from __future__ import annotations

import math

from .geometry import Pose2
from .slam.grid import GridSpec, OccupancyGrid, rasterize
from .world import World, solid_map

DEFAULT_RESOLUTION = 0.05


def room_spec(world: World, resolution: float = DEFAULT_RESOLUTION) -> GridSpec:
    """Grid covering the room with one spare cell so the far walls land inside."""
    w = int(math.ceil(world.config.room_width / resolution)) + 1
    h = int(math.ceil(world.config.room_length / resolution)) + 1
    return GridSpec(Pose2(), resolution, w, h)


def world_grid(world: World, resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
    """Walls and filled rows marked Occupied, everything else Free."""
    return rasterize(solid_map(world, resolution), room_spec(world, resolution))

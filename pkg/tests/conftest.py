import math

import numpy as np
import pytest

from pollibot.world import FlowerSpec, PlantRow, Side, WorldConfig, build_world


def one_row_config(flowers=(), **kw) -> WorldConfig:
    """A 6 x 4 m room with one default row along +x through the middle."""
    row = PlantRow("A", start=(1.28, 2.0))
    return WorldConfig(room_width=6.0, room_length=4.0, rows=(row,), flowers=tuple(flowers), robot_start=(0.6, 0.6, 0.0), **kw)


@pytest.fixture
def one_row_world():
    return build_world(one_row_config())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def flower(fid, side=Side.LEFT, arclength=1.72, height=0.55, ready=0.0, wilt=1e9, row="A"):
    return FlowerSpec(fid, row, side, arclength, height, ready, wilt)


__all__ = ["one_row_config", "flower", "math"]

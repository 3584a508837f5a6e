"""Greedy choice of the next cell to pollinate: distance cost plus inverse flower count."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import PollibotError
from ..geometry import Pose2
from ..world import GridCellRef


class NoCandidates(PollibotError):
    pass


@dataclass(frozen=True)
class CandidateCell:
    cell: GridCellRef
    parking: Pose2
    n_f: int

    def __post_init__(self):
        if self.n_f < 0:
            raise ValueError("n_f must be non-negative")


@dataclass(frozen=True)
class CostParams:
    c_d: float = 1.0
    c_f: float = 1.0

    def __post_init__(self):
        if not (self.c_d > 0 and self.c_f > 0):
            raise ValueError("c_d and c_f must be positive")


def cell_cost(robot: Pose2, cand: CandidateCell, params: CostParams) -> float:
    d = math.hypot(cand.parking.x - robot.x, cand.parking.y - robot.y)
    return params.c_d * d + params.c_f / cand.n_f


def next_pollination_cell(robot: Pose2, candidates: Sequence[CandidateCell], params: CostParams = CostParams()) -> CandidateCell:
    """Lowest-cost candidate among those with at least one flower cluster;
    ties go to the lowest (row_id, side, index)."""
    live = [c for c in candidates if c.n_f > 0]
    if not live:
        raise NoCandidates("no candidate cell has observed flowers")
    return min(live, key=lambda c: (cell_cost(robot, c, params), c.cell.row_id, c.cell.side.value, c.cell.index))

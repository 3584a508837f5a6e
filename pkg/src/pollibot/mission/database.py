"""Per-cell flower bookkeeping: inspection counts, readiness estimates,
visit history and per-flower pollination attempts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from ..vision import CellFlowerMap, record_pollination, update_cell_map
from ..world import GridCellRef

OUTCOMES = ("pollinated", "incomplete", "not_ready", "servo_failed", "unreachable")


@dataclass
class ReadinessEstimate:
    ready: float
    wilt: float
    consumed: bool = False
    rechecks: int = 0


@dataclass(frozen=True)
class Attempt:
    flower_id: str
    cell: GridCellRef
    time: float
    outcome: str
    coverage: float = 0.0


@dataclass
class FlowerDatabase:
    cell_map: CellFlowerMap = field(default_factory=CellFlowerMap)
    estimates: dict = field(default_factory=dict)  # cell -> list[ReadinessEstimate]
    visits: dict = field(default_factory=dict)  # cell -> list of arrival times
    skipped: list = field(default_factory=list)  # (cell, time)
    attempts: list = field(default_factory=list)
    pollinated: dict = field(default_factory=dict)  # flower id -> time
    ready_seen: set = field(default_factory=set)

    def observe(self, cell: GridCellRef, estimates, time: float) -> None:
        """Record an inspection sighting; the estimates of the largest sighting win."""
        n = len(estimates)
        before = self.cell_map.get(cell).count
        self.cell_map = update_cell_map(self.cell_map, cell, n, time)
        if n > before or cell not in self.estimates:
            self.estimates[cell] = [ReadinessEstimate(float(r), float(w)) for r, w in estimates]

    def open_estimates(self, cell: GridCellRef) -> list:
        return [e for e in self.estimates.get(cell, ()) if not e.consumed]

    def ready_count(self, cell: GridCellRef, time: float, margin: float) -> int:
        return sum(1 for e in self.open_estimates(cell) if e.ready + margin <= time < e.wilt)

    def next_ready_time(self, time: float, margin: float) -> Optional[float]:
        """Earliest future moment an open estimate turns ready, or None."""
        out = math.inf
        for cell in self.estimates:
            for e in self.open_estimates(cell):
                t = e.ready + margin
                if t > time and t < e.wilt:
                    out = min(out, t)
        return None if out == math.inf else out

    def record_visit(self, cell: GridCellRef, time: float, found: int, recheck_delay: float, max_rechecks: int) -> None:
        """Settle the cell's estimates after a survey that found ``found`` ready flowers.

        The earliest ``found`` estimates are consumed. Estimates that claimed
        readiness but had no flower to match are pushed back for a recheck a
        limited number of times.
        """
        self.visits.setdefault(cell, []).append(time)
        rec = self.cell_map.get(cell)
        records = dict(self.cell_map.records)
        records[cell] = replace(rec, count=0)
        self.cell_map = replace(self.cell_map, records=records)
        open_ = sorted(self.open_estimates(cell), key=lambda e: e.ready)
        for e in open_[:found]:
            e.consumed = True
        for e in open_[found:]:
            if e.ready <= time:
                if e.rechecks >= max_rechecks:
                    e.consumed = True
                else:
                    e.rechecks += 1
                    e.ready = time + recheck_delay

    def skip(self, cell: GridCellRef, time: float) -> None:
        self.skipped.append((cell, time))
        for e in self.open_estimates(cell):
            e.consumed = True

    def record_attempt(self, attempt: Attempt) -> None:
        if attempt.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {attempt.outcome!r}")
        if attempt.flower_id in self.pollinated:
            raise ValueError(f"flower {attempt.flower_id} is already pollinated")
        self.attempts.append(attempt)
        if attempt.outcome == "pollinated":
            self.pollinated[attempt.flower_id] = attempt.time
            self.cell_map = record_pollination(self.cell_map, attempt.cell)

    @property
    def attempted(self) -> int:
        return len(self.attempts)

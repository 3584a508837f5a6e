"""Run metrics and the one-line session report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .database import FlowerDatabase

REPORT_FIELDS = ("distance_m", "sim_time_s", "pollinated", "attempted", "ready_total", "rate", "collisions", "pose_rmse_m")


@dataclass
class Metrics:
    distance_m: float = 0.0
    sim_time_s: float = 0.0
    pollinated: int = 0
    attempted: int = 0
    collisions: int = 0
    phase_durations: dict = field(default_factory=dict)
    pose_sq_sum: float = 0.0
    pose_samples: int = 0

    @property
    def pose_rmse(self) -> float:
        return math.sqrt(self.pose_sq_sum / self.pose_samples) if self.pose_samples else 0.0

    def validate(self) -> None:
        if self.pollinated > self.attempted:
            raise ValueError("more flowers pollinated than attempted")
        if min(self.distance_m, self.sim_time_s, self.collisions, self.pose_sq_sum) < 0:
            raise ValueError("metrics must be non-negative")


@dataclass(frozen=True)
class Report:
    distance_m: float
    sim_time_s: float
    pollinated: int
    attempted: int
    ready_total: int
    rate: float
    collisions: int
    pose_rmse_m: float

    def row(self) -> list[str]:
        return [
            f"{self.distance_m:.6f}", f"{self.sim_time_s:.6f}", str(self.pollinated), str(self.attempted),
            str(self.ready_total), f"{self.rate:.6f}", str(self.collisions), f"{self.pose_rmse_m:.6f}",
        ]

    def csv(self) -> str:
        return ",".join(REPORT_FIELDS) + "\n" + ",".join(self.row()) + "\n"


def summarize(metrics: Metrics, db: FlowerDatabase) -> Report:
    """Totals plus the pollination rate over flowers that were ever Ready.
    With no such flower the rate is 1.0."""
    ready = len(db.ready_seen)
    pollinated = len(db.pollinated)
    rate = pollinated / ready if ready else 1.0
    return Report(
        distance_m=metrics.distance_m,
        sim_time_s=metrics.sim_time_s,
        pollinated=pollinated,
        attempted=db.attempted,
        ready_total=ready,
        rate=rate,
        collisions=metrics.collisions,
        pose_rmse_m=metrics.pose_rmse,
    )

"""Tunable settings for the mission executive, grouped the way scenario files
group them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..arm import ArmSpec, ServoParams
from ..planning import DWAParams
from ..slam import SlamParams


@dataclass(frozen=True)
class VisionParams:
    geolocate_range: float = 3.0  # m along the camera ray
    min_blob: int = 25
    tau: float = 0.6
    min_area: int = 25
    max_area: int = 5000


@dataclass(frozen=True)
class PlanningParams:
    resolution: float = 0.05
    inflate_global: float = 0.45
    inflate_local: float = 0.30
    lookahead: float = 0.45
    escape_speed: float = 0.1
    prune_length: float = 0.3
    c_d: float = 1.0
    c_f: float = 1.0
    dwa: DWAParams = field(default_factory=DWAParams)


@dataclass(frozen=True)
class ArmParams:
    spec: ArmSpec = field(default_factory=ArmSpec)
    servo: ServoParams = field(default_factory=ServoParams)
    sigma_far: float = 0.01
    strokes: int = 3
    delta: float = 0.3
    threshold: float = 0.8
    approach_standoff: float = 0.25  # servo starts this far short of the target
    survey_time: float = 4.0
    joint_speed: float = 1.0  # rad/s along the joint-space chord
    servo_step_time: float = 0.2
    stroke_time: float = 1.0


@dataclass(frozen=True)
class MissionParams:
    dt: float = 0.1
    max_time: float = 3600.0
    arrive_position: float = 0.05
    arrive_heading: float = math.radians(5.0)
    dock_radius: float = 0.3
    dock_speed: float = 0.15
    readiness_margin: float = 6.0
    recheck_delay: float = 30.0
    max_rechecks: int = 2
    stuck_time: float = 30.0


@dataclass(frozen=True)
class Settings:
    slam: SlamParams = field(default_factory=SlamParams)
    vision: VisionParams = field(default_factory=VisionParams)
    planning: PlanningParams = field(default_factory=PlanningParams)
    arm: ArmParams = field(default_factory=ArmParams)
    mission: MissionParams = field(default_factory=MissionParams)

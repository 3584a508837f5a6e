"""Scenario files: strict JSON documents mapped onto the configuration
dataclasses. Unknown keys, wrong types and missing mandatory fields are
rejected with the offending path in the message."""

from __future__ import annotations

import dataclasses
import enum
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from .errors import PollibotError, ScenarioError
from .mission.params import ArmParams, MissionParams, PlanningParams, Settings, VisionParams
from .slam import SlamParams
from .world import CameraSpec, OdomNoise, ScanSpec, WorldConfig, validate_config

MAX_SEED = 2**64 - 1
SENSOR_FIELDS = {"odometry": ("odom_noise", OdomNoise), "scan": ("scan_spec", ScanSpec), "camera": ("camera_spec", CameraSpec)}
WORLD_EXCLUDED = {"seed", "odom_noise", "scan_spec", "camera_spec"}
MANDATORY_WORLD = ("room_width", "room_length", "rows", "flowers")


@dataclass(frozen=True)
class Scenario:
    seed: int
    world: WorldConfig
    settings: Settings = field(default_factory=Settings)


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(value)
        except ValueError:
            raise ScenarioError(f"{path}: {value!r} is not one of {[e.value for e in tp]}") from None
    if origin is tuple:
        if not isinstance(value, list):
            raise ScenarioError(f"{path}: expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ScenarioError(f"{path}: expected {len(args)} entries, got {len(value)}")
        return tuple(_convert(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{path}: expected a number")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{path}: expected an integer")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{path}: expected true or false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{path}: expected a string")
        return value
    raise ScenarioError(f"{path}: unsupported field type {tp!r}")


def _build(cls, data, path: str, exclude=frozenset(), required=()):
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected an object")
    hints = _hints(cls)
    names = [f.name for f in dataclasses.fields(cls) if f.name not in exclude]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in exclude:
            continue
        sub = f"{path}.{f.name}" if path else f.name
        no_default = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if f.name not in data:
            if no_default or f.name in required:
                raise ScenarioError(f"{sub}: missing mandatory field")
            continue
        kwargs[f.name] = _convert(hints[f.name], data[f.name], sub)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"{path}: {e}") from None


def _dump(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _dump(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_dump(v) for v in value]
    return value


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    sections = {"seed", "world", "sensors", "slam", "vision", "planning", "arm", "mission"}
    unknown = sorted(set(doc) - sections)
    if unknown:
        raise ScenarioError(f"unknown top-level key(s) {', '.join(unknown)}")
    if "seed" not in doc:
        raise ScenarioError("seed: missing mandatory field")
    seed = _convert(int, doc["seed"], "seed")
    if not 0 <= seed <= MAX_SEED:
        raise ScenarioError("seed: must be an unsigned 64-bit integer")
    if "world" not in doc:
        raise ScenarioError("world: missing mandatory section")

    sensors = doc.get("sensors", {})
    if not isinstance(sensors, dict):
        raise ScenarioError("sensors: expected an object")
    bad = sorted(set(sensors) - set(SENSOR_FIELDS))
    if bad:
        raise ScenarioError(f"sensors: unknown key(s) {', '.join(bad)}")
    sensor_kwargs = {
        attr: _build(cls, sensors[key], f"sensors.{key}") for key, (attr, cls) in SENSOR_FIELDS.items() if key in sensors
    }
    world = _build(WorldConfig, doc["world"], "world", exclude=WORLD_EXCLUDED, required=MANDATORY_WORLD)
    world = dataclasses.replace(world, seed=seed, **sensor_kwargs)
    try:
        validate_config(world)
    except PollibotError as e:
        raise ScenarioError(f"world: {e}") from None

    settings = Settings(
        slam=_build(SlamParams, doc.get("slam", {}), "slam"),
        vision=_build(VisionParams, doc.get("vision", {}), "vision"),
        planning=_build(PlanningParams, doc.get("planning", {}), "planning"),
        arm=_build(ArmParams, doc.get("arm", {}), "arm"),
        mission=_build(MissionParams, doc.get("mission", {}), "mission"),
    )
    return Scenario(seed, world, settings)


def scenario_to_dict(scenario: Scenario) -> dict:
    w = scenario.world
    world = {f.name: _dump(getattr(w, f.name)) for f in dataclasses.fields(w) if f.name not in WORLD_EXCLUDED}
    doc = {
        "seed": scenario.seed,
        "world": world,
        "sensors": {key: _dump(getattr(w, attr)) for key, (attr, _) in SENSOR_FIELDS.items()},
    }
    for f in dataclasses.fields(scenario.settings):
        doc[f.name] = _dump(getattr(scenario.settings, f.name))
    return doc


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e}") from None
    return scenario_from_dict(doc)


def dumps(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


def load(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from None
    return loads(text)


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package."""
    p = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not p.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return p


__all__ = [
    "MAX_SEED", "Scenario", "ScenarioError", "bundled", "dumps", "load", "loads",
    "scenario_from_dict", "scenario_to_dict",
]

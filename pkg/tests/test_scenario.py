import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pollibot.errors import PollibotError
from pollibot.scenario import MAX_SEED, ScenarioError, bundled, dumps, load, loads, scenario_from_dict, scenario_to_dict
from pollibot.world import Side


def minimal(**world):
    doc = {"seed": 3, "world": {"room_width": 6.0, "room_length": 4.0, "rows": [], "flowers": []}}
    doc["world"].update(world)
    return doc


def raises_at(doc, fragment):
    with pytest.raises(ScenarioError) as e:
        scenario_from_dict(doc)
    assert fragment in str(e.value)


@pytest.mark.parametrize("name", ["empty", "demo_3row"])
def test_bundled_round_trip(name):
    s = load(bundled(name))
    again = loads(dumps(s))
    assert again == s
    assert scenario_to_dict(again) == json.loads(bundled(name).read_text())


def test_minimal_gets_defaults():
    s = scenario_from_dict(minimal())
    assert s.seed == 3 and s.world.seed == 3
    assert s.settings.mission.dt == 0.1 and s.world.d_park == 0.75
    assert loads(dumps(s)) == s


def test_rows_and_flowers_parse():
    doc = minimal(rows=[{"id": "A", "start": [1.0, 1.8]}],
                  flowers=[{"id": "f", "row": "A", "side": "left", "arclength": 1.0}])
    s = scenario_from_dict(doc)
    assert s.world.rows[0].start == (1.0, 1.8)
    assert s.world.flowers[0].side is Side.LEFT
    assert loads(dumps(s)) == s


@given(st.integers(0, MAX_SEED), st.floats(0.05, 0.5), st.integers(1, 6), st.booleans())
def test_round_trip_overrides(seed, res, strokes, fp):
    doc = minimal()
    doc["seed"] = seed
    doc["planning"] = {"resolution": res}
    doc["arm"] = {"strokes": strokes, "servo": {"alpha": 0.7}}
    doc["sensors"] = {"camera": {"false_positive_rate": 0.1 if fp else 0.0}}
    s = scenario_from_dict(doc)
    assert s.seed == seed and s.settings.planning.resolution == res and s.settings.arm.strokes == strokes
    assert loads(dumps(s)) == s


@pytest.mark.parametrize("where, fragment", [
    (lambda d: d.update(extra=1), "extra"),
    (lambda d: d["world"].update(colour="red"), "world: unknown key(s) colour"),
    (lambda d: d.update(sensors={"lidar": {}}), "sensors: unknown key(s) lidar"),
    (lambda d: d.update(arm={"servo": {"gain": 1.0}}), "arm.servo: unknown key(s) gain"),
    (lambda d: d["world"].update(seed=4), "world: unknown key(s) seed"),
])
def test_unknown_keys_rejected(where, fragment):
    doc = minimal()
    where(doc)
    raises_at(doc, fragment)


@pytest.mark.parametrize("field", ["room_width", "room_length", "rows", "flowers"])
def test_missing_world_fields(field):
    doc = minimal()
    del doc["world"][field]
    raises_at(doc, f"world.{field}: missing mandatory field")


def test_missing_seed_and_world():
    raises_at({"world": minimal()["world"]}, "seed")
    raises_at({"seed": 1}, "world")


@pytest.mark.parametrize("patch, fragment", [
    ({"seed": True}, "seed: expected an integer"),
    ({"seed": 1.5}, "seed: expected an integer"),
    ({"seed": -1}, "unsigned 64-bit"),
    ({"seed": MAX_SEED + 1}, "unsigned 64-bit"),
    ({"mission": {"max_rechecks": True}}, "mission.max_rechecks: expected an integer"),
    ({"planning": {"c_d": "1"}}, "planning.c_d: expected a number"),
    ({"planning": {"c_d": False}}, "planning.c_d: expected a number"),
    ({"arm": {"servo": {"alpha": 0.0}}}, "arm.servo"),
])
def test_type_and_value_errors(patch, fragment):
    doc = minimal()
    doc.update(patch)
    raises_at(doc, fragment)


def test_bad_enum_and_tuple_length():
    raises_at(minimal(flowers=[{"id": "f", "row": "A", "side": "up", "arclength": 1.0}]), "not one of")
    raises_at(minimal(robot_start=[1.0, 1.0]), "world.robot_start: expected 3 entries")


def test_row_outside_room_names_row():
    raises_at(minimal(rows=[{"id": "Z", "start": [5.0, 2.0]}]), "'Z'")


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        loads("{not json")
    with pytest.raises(ScenarioError):
        load(tmp_path / "nope.json")
    with pytest.raises(ScenarioError):
        bundled("nope")


def test_scenario_error_is_both_kinds():
    assert issubclass(ScenarioError, PollibotError) and issubclass(ScenarioError, ValueError)


def test_dump_is_not_aliased():
    s = load(bundled("empty"))
    d = scenario_to_dict(s)
    d2 = copy.deepcopy(d)
    d["world"]["room_width"] = 99.0
    assert scenario_to_dict(s) == d2

import csv
import json
import subprocess
import sys

import pytest

from pollibot.cli import main
from pollibot.scenario import bundled
from pollibot.vision.synthetic import LABEL_HEADER

EMPTY = str(bundled("empty"))
HEADER = "distance_m,sim_time_s,pollinated,attempted,ready_total,rate,collisions,pose_rmse_m"


def write_doc(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def one_flower_doc(**mission):
    return {
        "seed": 11,
        "world": {
            "room_width": 6.0, "room_length": 4.0,
            "rows": [{"id": "A", "start": [1.0, 1.8]}],
            "flowers": [{"id": "f", "row": "A", "side": "left", "arclength": 1.72}],
            "robot_start": [0.6, 0.6, 0.0],
        },
        "mission": mission,
    }


# -- run ---------------------------------------------------------------------


def test_run_empty_world(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", EMPTY, "--out-dir", str(out), "--quiet"]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines == [HEADER, "0.000000,0.000000,0,0,0,1.000000,0,0.000000"]
    assert {p.name for p in out.iterdir()} == {"metrics.csv", "trajectory.csv", "flowers.json", "map.svg"}


def test_run_without_svg(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", EMPTY, "--out-dir", str(out), "--svg", "false", "--quiet"]) == 0
    assert not (out / "map.svg").exists()


def test_row_outside_room_exits_2(tmp_path, capsys):
    doc = one_flower_doc()
    doc["world"]["rows"][0]["start"] = [4.0, 1.8]
    rc = main(["run", "--scenario", write_doc(tmp_path, doc), "--out-dir", str(tmp_path / "o")])
    assert rc == 2
    assert "'A'" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d["world"].pop("rows"),
    lambda d: d.update(seed=True),
])
def test_invalid_scenarios_exit_2(tmp_path, mutate):
    doc = one_flower_doc()
    mutate(doc)
    assert main(["run", "--scenario", write_doc(tmp_path, doc), "--out-dir", str(tmp_path / "o")]) == 2


def test_missing_and_malformed_files_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", "--scenario", str(bad)]) == 2
    assert main(["run", "--scenario", str(tmp_path / "none.json")]) == 2


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--scenario", EMPTY, "--seed", "-1"],
    ["run", "--scenario", EMPTY, "--seed", str(2**64)],
    ["run", "--scenario", EMPTY, "--max-time", "0"],
    ["run", "--scenario", EMPTY, "--svg", "maybe"],
    ["run", "--scenario", EMPTY, "--runs", "0"],
    ["frobnicate"],
    [],
])
def test_bad_arguments_exit_2(argv, capsys):
    assert main(argv) == 2


def test_max_time_exits_3_but_writes(tmp_path):
    out = tmp_path / "o"
    rc = main(["run", "--scenario", write_doc(tmp_path, one_flower_doc()), "--out-dir", str(out),
               "--max-time", "5", "--quiet"])
    assert rc == 3
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert rows[0] == ["t", "x", "y", "theta"]
    assert float(rows[-1][0]) == pytest.approx(5.0)


def test_one_flower_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", write_doc(tmp_path, one_flower_doc()), "--out-dir", str(out), "--quiet"]) == 0
    m = dict(zip(*csv.reader((out / "metrics.csv").open())))
    assert (m["pollinated"], m["attempted"], m["ready_total"], m["rate"]) == ("1", "1", "1", "1.000000")
    fl = json.loads((out / "flowers.json").read_text())
    (f,) = fl["flowers"]
    assert f["id"] == "f" and f["state"] == "pollinated" and f["pollinated_time"] > 0
    svg = (out / "map.svg").read_text()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg.rstrip().endswith("</svg>")
    traj = list(csv.reader((out / "trajectory.csv").open()))[1:]
    ts = [float(r[0]) for r in traj]
    assert ts == sorted(ts) and len(ts) > 100


def test_seed_override_and_determinism(tmp_path):
    path = write_doc(tmp_path, one_flower_doc())
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["run", "--scenario", path, "--out-dir", str(out), "--seed", "5", "--max-time", "20", "--quiet"]) == 3
        outs.append(out)
    for name in ("metrics.csv", "trajectory.csv", "flowers.json", "map.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_multiple_runs_get_own_directories(tmp_path):
    out = tmp_path / "many"
    assert main(["run", "--scenario", EMPTY, "--out-dir", str(out), "--runs", "2", "--seed", "7", "--quiet"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["seed_7", "seed_8"]
    assert all((out / d / "metrics.csv").exists() for d in ("seed_7", "seed_8"))


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pollibot.cli", "run", "--scenario", EMPTY,
                        "--out-dir", str(tmp_path / "o"), "--quiet"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stderr == ""


# -- eval-vision and gen-corpus ----------------------------------------------


def test_counts_report(tmp_path, capsys):
    counts = tmp_path / "c.csv"
    counts.write_text("tp,fp,tn,fn\n1892,515,1609,210\n")
    assert main(["eval-vision", "--counts", str(counts), "--out", str(tmp_path / "r.csv")]) == 0
    row = dict(zip(*csv.reader(capsys.readouterr().out.splitlines())))
    assert row["precision"] == "0.786041" and row["recall"] == "0.900095"
    assert (tmp_path / "r.csv").read_text().splitlines()[1] == "1892,515,1609,210,0.786041,0.900095"


def test_generated_corpus_evaluates(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert main(["gen-corpus", str(corpus), "--images", "6", "--seed", "2", "--quiet"]) == 0
    assert main(["eval-vision", str(corpus)]) == 0
    row = dict(zip(*csv.reader(capsys.readouterr().out.splitlines())))
    assert 0.0 <= float(row["precision"]) <= 1.0 and 0.0 <= float(row["recall"]) <= 1.0


def test_empty_test_split_exits_2(tmp_path):
    corpus = tmp_path / "corpus"
    assert main(["gen-corpus", str(corpus), "--images", "4", "--quiet"]) == 0
    rows = list(csv.DictReader((corpus / "labels.csv").open()))
    with (corpus / "labels.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, LABEL_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(r for r in rows if r["split"] == "train")
    assert main(["eval-vision", str(corpus), "--quiet"]) == 2


@pytest.mark.parametrize("text", ["", "tp,fp\n1,2\n", "tp,fp,tn,fn\nx,1,1,1\n"])
def test_malformed_counts_exit_2(tmp_path, text):
    p = tmp_path / "c.csv"
    p.write_text(text)
    assert main(["eval-vision", "--counts", str(p), "--quiet"]) == 2


def test_eval_vision_needs_input(tmp_path):
    assert main(["eval-vision", "--quiet"]) == 2
    assert main(["eval-vision", str(tmp_path / "missing"), "--quiet"]) == 2

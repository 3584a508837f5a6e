"""Command line entry point: ``pollibot run``, ``pollibot eval-vision`` and
``pollibot gen-corpus``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .errors import PollibotError
from .mission import Mission, MissionFailure, run_mission, summarize
from .render import render_svg
from .scenario import MAX_SEED, Scenario, ScenarioError, load
from .vision import CorpusSpec, EmptySplit, evaluate_corpus, generate_corpus, read_counts, report_csv
from .world import World, build_world

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("pollibot")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


# -- outputs -----------------------------------------------------------------


def trajectory_csv(mission: Mission) -> str:
    lines = ["t,x,y,theta"]
    lines += [f"{s.t!r},{s.x!r},{s.y!r},{s.theta!r}" for s in mission.trajectory]
    return "\n".join(lines) + "\n"


def flowers_json(mission: Mission, world: World) -> str:
    db = mission.db
    attempts: dict = {}
    for a in db.attempts:
        attempts.setdefault(a.flower_id, []).append({"time": a.time, "outcome": a.outcome, "coverage": a.coverage})
    flowers = []
    for f in world.flowers:
        flowers.append({
            "id": f.id,
            "cell": f.cell.key(),
            "position": list(f.position),
            "state": f.state.value,
            "ready_time": f.ready_time,
            "wilt_time": f.wilt_time,
            "was_ready": f.id in db.ready_seen,
            "pollinated_time": f.pollinated_time,
            "pistil_coverage": f.pistil_coverage,
            "attempts": attempts.get(f.id, []),
        })
    cells = []
    for cell in sorted(set(db.estimates) | set(db.visits)):
        rec = db.cell_map.get(cell)
        cells.append({
            "cell": cell.key(),
            "observed_estimates": len(db.estimates.get(cell, ())),
            "pollinated_count": rec.pollinated_count,
            "visits": db.visits.get(cell, []),
        })
    doc = {
        "flowers": flowers,
        "cells": cells,
        "skipped": [{"cell": c.key(), "time": t} for c, t in db.skipped],
        "phases": [p.value for p in mission.phases],
    }
    return json.dumps(doc, indent=2) + "\n"


def write_outputs(out_dir: Path, mission: Mission, world: World, svg: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = summarize(mission.metrics, mission.db)
    (out_dir / "metrics.csv").write_text(report.csv())
    (out_dir / "trajectory.csv").write_text(trajectory_csv(mission))
    (out_dir / "flowers.json").write_text(flowers_json(mission, world))
    if svg:
        (out_dir / "map.svg").write_text(render_svg(world, mission.trajectory, mission.graph.ridge))


def execute(scenario: Scenario, out_dir: Path, seed: Optional[int] = None, max_time: Optional[float] = None, svg: bool = True) -> int:
    """Run one scenario and write its outputs; returns the exit code."""
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=seed, world=dataclasses.replace(scenario.world, seed=seed))
    world = build_world(scenario.world)
    mission, world = run_mission(world, scenario.settings, scenario.seed, max_time)
    write_outputs(out_dir, mission, world, svg)
    if not mission.done:
        log.error("max sim time %.1f s reached in phase %s", world.time, mission.phase.value)
        return EXIT_RUNTIME
    log.info("done at t=%.1f s: %s", world.time, summarize(mission.metrics, mission.db))
    return EXIT_OK


def _execute_job(args) -> int:
    scenario, out_dir, seed, max_time, svg = args
    try:
        return execute(scenario, out_dir, seed, max_time, svg)
    except (MissionFailure, PollibotError) as e:
        print(f"error: seed {seed}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


# -- commands ----------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        scenario = load(args.scenario)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out_dir)
    base = scenario.seed if args.seed is None else args.seed
    if args.runs == 1:
        try:
            return execute(scenario, out, args.seed, args.max_time, args.svg)
        except (MissionFailure, PollibotError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_RUNTIME
    seeds = [(base + k) % (MAX_SEED + 1) for k in range(args.runs)]
    jobs = [(scenario, out / f"seed_{s}", s, args.max_time, args.svg) for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_execute_job, jobs))
    else:
        codes = [_execute_job(j) for j in jobs]
    return max(codes)


def cmd_eval_vision(args) -> int:
    try:
        if args.counts:
            counts = read_counts(Path(args.counts).read_text())
        else:
            if args.images is None:
                print("error: give an image directory or --counts", file=sys.stderr)
                return EXIT_INVALID
            _, counts = evaluate_corpus(args.images, args.labels, min_blob=args.min_blob)
    except EmptySplit as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError, PollibotError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    text = report_csv(counts)
    if args.out:
        Path(args.out).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    spec = CorpusSpec(n_images=args.images)
    labels = generate_corpus(args.out_dir, spec, args.seed)
    if not args.quiet:
        print(f"wrote {args.images} images and {len(labels)} labels to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pollibot", description="Greenhouse pollination mission simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario to completion and write its outputs")
    r.add_argument("--scenario", required=True, help="scenario JSON file")
    r.add_argument("--out-dir", default="out", help="output directory (default: out)")
    r.add_argument("--seed", type=_seed, default=None, help="override the scenario seed")
    r.add_argument("--max-time", type=_positive, default=None, help="simulated-time budget in seconds")
    r.add_argument("--svg", type=_bool, default=True, help="write map.svg (default: true)")
    r.add_argument("--runs", type=int, default=1, help="run this many consecutive seeds, one sub-directory each")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for --runs")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval-vision", help="train and evaluate the colour classifier on a labelled corpus")
    e.add_argument("images", nargs="?", help="directory of P6 images")
    e.add_argument("--labels", default=None, help="labels CSV (default: IMAGES/labels.csv)")
    e.add_argument("--counts", default=None, help="report from a tp,fp,tn,fn CSV instead of images")
    e.add_argument("--out", default=None, help="write the report here as well")
    e.add_argument("--min-blob", type=int, default=25)
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_eval_vision)

    g = sub.add_parser("gen-corpus", help="write a synthetic labelled image corpus")
    g.add_argument("out_dir")
    g.add_argument("--images", type=int, default=20)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--quiet", action="store_true")
    g.set_defaults(func=cmd_gen_corpus)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    if getattr(args, "runs", 1) < 1 or getattr(args, "jobs", 1) < 1:
        print("error: --runs and --jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

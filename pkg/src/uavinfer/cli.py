"""Command line front end: ``run``, ``sweep`` and ``profile``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import sim
from .baselines import Strategy, StrategyError
from .cnn import CnnError, profile_table, resolve_model
from .config import default_scenario, load_scenario
from .model import ScenarioError

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _scenario(path: str | None, seed: int | None):
    s = load_scenario(path) if path else default_scenario()
    return dataclasses.replace(s, seed=seed) if seed is not None else s


def _load_spec(ref: str) -> sim.SweepSpec:
    path = Path(ref)
    if path.exists():
        text = path.read_text()
    else:
        name = ref if ref.endswith(".json") else f"{ref}.json"
        text = resources.files("uavinfer").joinpath(f"data/sweeps/{name}").read_text()
    return sim.SweepSpec.from_dict(json.loads(text))


def cmd_run(args: argparse.Namespace) -> int:
    s = _scenario(args.config, args.seed)
    strategy = Strategy.named(args.strategy, seed=s.seed, node_limit=args.node_limit)
    results = sim.run_frames(s, strategy, args.frames, keep_detail=True)
    out = Path(args.out) if args.out else None
    if out is not None and out.suffix == ".json":
        payload = [
            {"frame": r.frame, "strategy": r.strategy, "feasible": r.feasible, "latency_s": r.latency_s,
             "breakdown": r.breakdown, "total_power_w": r.total_power_w, "min_power_w": r.min_power_w,
             "per_request_s": list(r.per_request_s), "error": r.error, **(r.detail or {})}
            for r in results
        ]
        sim.write_text(out, json.dumps(payload, indent=2) + "\n")
    else:
        text = sim.rows_to_csv(sim.frames_to_rows(results))
        if out is None:
            sys.stdout.write(text)
        else:
            sim.write_text(out, text)
    return EXIT_OK if any(r.feasible for r in results) else EXIT_INFEASIBLE


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _scenario(args.config, args.seed)
    spec = _load_spec(args.spec)
    rows = sim.run_sweep(spec, base)
    out = Path(args.out)
    sim.write_text(out, sim.rows_to_csv(rows))
    sim.write_text(out.with_name(f"{out.stem}_summary.csv"), sim.summary_to_csv(sim.summarize(rows)))
    return EXIT_OK if any(r.result.feasible for r in rows) else EXIT_INFEASIBLE


def cmd_profile(args: argparse.Namespace) -> int:
    ref = args.model
    if Path(ref).is_file():
        ref = json.loads(Path(ref).read_text())
    sys.stdout.write(profile_table(resolve_model(ref)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavinfer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver fallbacks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="plan consecutive frames with one strategy")
    run.add_argument("--config", help="scenario JSON (default: the shipped scenario)")
    run.add_argument("--strategy", choices=["llhr", "heuristic", "random"], default="llhr")
    run.add_argument("--frames", type=int, default=1)
    run.add_argument("--seed", type=int)
    run.add_argument("--node-limit", type=int, default=20_000, help="branch-and-bound node budget")
    run.add_argument("--out", help=".csv for frame rows, .json for full plans (default: CSV on stdout)")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    sweep.add_argument("--config", help="base scenario JSON (default: the shipped scenario)")
    sweep.add_argument("--spec", required=True, help="sweep JSON file or the name of a shipped spec")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", required=True, help="CSV path; a <stem>_summary.csv is written next to it")
    sweep.set_defaults(func=cmd_sweep)

    prof = sub.add_parser("profile", help="print per-layer load, memory and output size")
    prof.add_argument("--model", required=True, help="lenet5, alexnet or a model JSON file")
    prof.set_defaults(func=cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, StrategyError, CnnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Frame loop, parameter sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .allocation import AllocationInfeasible
from .baselines import Strategy, StrategyError, StrategyKind, run_strategy
from .channel import ChannelError
from .config import (
    with_bandwidth,
    with_device_profile,
    with_model,
    with_p_max,
    with_request_count,
    with_time_frame,
    with_uav_count,
)
from .model import Scenario, ScenarioError
from .position import PlacementInfeasible
from .power import PowerInfeasible

log = logging.getLogger(__name__)

CSV_COLUMNS = ("variable", "value", "strategy", "trial", "frame",
               "latency_s", "total_power_w", "min_power_w", "feasible")
SUMMARY_COLUMNS = ("variable", "value", "strategy", "trials", "feasible",
                   "latency_mean_s", "latency_std_s", "min_power_mean_w", "min_power_std_w")
SWEEP_VARIABLES = ("p_max", "bandwidth", "uav_count", "request_count", "device_profile", "cnn_model")
_INFEASIBLE = (AllocationInfeasible, PlacementInfeasible, PowerInfeasible, ChannelError)


@dataclass(frozen=True)
class FrameResult:
    frame: int
    strategy: str
    feasible: bool
    latency_s: float | None = None
    total_power_w: float | None = None
    min_power_w: float | None = None
    per_request_s: tuple[float, ...] = ()
    breakdown: tuple[float, float, float] | None = None
    error: str = ""
    detail: dict[str, Any] | None = field(default=None, compare=False, repr=False)


def run_frames(scenario: Scenario, strategy: Strategy, n_frames: int, *, keep_detail: bool = False) -> list[FrameResult]:
    """Plan ``n_frames`` consecutive frames; infeasible frames become rows with ``feasible=False``."""
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    rows = []
    previous = None
    for frame in range(n_frames):
        try:
            pos, power, plan = run_strategy(strategy, scenario, frame, previous)
        except _INFEASIBLE as exc:
            log.info("frame %d infeasible for %s: %s", frame, strategy.kind.value, exc)
            rows.append(FrameResult(frame, strategy.kind.value, False, error=str(exc)))
            continue
        if strategy.kind is StrategyKind.LLHR:
            previous = pos
        detail = None
        if keep_detail:
            detail = {
                "positions": [list(p) for p in pos.positions],
                "cells": list(pos.cells),
                "powers_w": list(power.powers_w),
                "assign": [list(a) for a in plan.assign],
                "method": plan.method,
            }
        rows.append(FrameResult(
            frame=frame,
            strategy=strategy.kind.value,
            feasible=True,
            latency_s=plan.latency_s,
            total_power_w=power.total_w,
            min_power_w=power.total_w / scenario.num_uavs,
            per_request_s=plan.per_request_s,
            breakdown=tuple(plan.breakdown),
            detail=detail,
        ))
    return rows


# -- sweeps -----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Cross product of ``values`` x ``strategies`` x ``trials``.

    ``overrides`` maps sweep variables (plus ``time_frame_s``) to fixed values
    applied to the base scenario before the swept variable.
    """

    variable: str
    values: tuple
    trials: int = 20
    strategies: tuple[str, ...] = ("llhr",)
    frames: int = 1
    overrides: dict[str, Any] = field(default_factory=dict)
    node_limit: int | None = 2000

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; choose from {SWEEP_VARIABLES}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.trials < 1 or self.frames < 1:
            raise ValueError("trials and frames must be at least 1")
        for key in self.overrides:
            if key not in SWEEP_VARIABLES and key != "time_frame_s":
                raise ValueError(f"unknown override {key!r}")
        for name in self.strategies:
            StrategyKind(name)
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "strategies", tuple(self.strategies))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown sweep keys {sorted(unknown)}")
        return cls(**data)


def apply_setting(s: Scenario, variable: str, value: Any) -> Scenario:
    if variable == "p_max":
        return with_p_max(s, float(value))
    if variable == "bandwidth":
        return with_bandwidth(s, float(value))
    if variable == "uav_count":
        return with_uav_count(s, int(value))
    if variable == "request_count":
        return with_request_count(s, int(value))
    if variable == "device_profile":
        return with_device_profile(s, str(value))
    if variable == "cnn_model":
        return with_model(s, value)
    if variable == "time_frame_s":
        return with_time_frame(s, float(value))
    raise ValueError(f"unknown sweep variable {variable!r}")


def trial_scenario(base: Scenario, spec: SweepSpec, value: Any, trial: int) -> Scenario:
    s = base
    for key, v in spec.overrides.items():
        s = apply_setting(s, key, v)
    s = apply_setting(s, spec.variable, value)
    # same request sources for every value of a trial, fresh ones per trial
    return with_request_count(s, len(s.requests), seed=base.seed + trial)


@dataclass(frozen=True)
class SweepRow:
    variable: str
    value: Any
    strategy: str
    trial: int
    result: FrameResult


def run_sweep(spec: SweepSpec, base: Scenario) -> list[SweepRow]:
    rows = []
    for value in spec.values:
        for name in spec.strategies:
            for trial in range(spec.trials):
                try:
                    s = trial_scenario(base, spec, value, trial)
                    strategy = Strategy.named(name, seed=base.seed + trial, node_limit=spec.node_limit)
                    results = run_frames(s, strategy, spec.frames)
                except (ScenarioError, StrategyError) as exc:
                    log.warning("sweep cell %s=%r failed: %s", spec.variable, value, exc)
                    results = [FrameResult(f, name, False, error=str(exc)) for f in range(spec.frames)]
                rows.extend(SweepRow(spec.variable, value, name, trial, r) for r in results)
    return rows


@dataclass(frozen=True)
class CellSummary:
    variable: str
    value: Any
    strategy: str
    trials: int
    feasible: int
    latency_mean_s: float
    latency_std_s: float
    min_power_mean_w: float
    min_power_std_w: float


def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if len(arr) > 1 else 0.0


def summarize(rows: Iterable[SweepRow]) -> list[CellSummary]:
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.variable, _key(row.value), row.strategy), []).append(row)
    out = []
    for (variable, _, strategy), members in groups.items():
        ok = [m.result for m in members if m.result.feasible]
        lat = _mean_std([r.latency_s for r in ok])
        pw = _mean_std([r.min_power_w for r in ok])
        out.append(CellSummary(variable, members[0].value, strategy, len({m.trial for m in members}),
                               len(ok), lat[0], lat[1], pw[0], pw[1]))
    return out


def pooled_std(a: CellSummary, b: CellSummary, metric: str = "latency") -> float:
    sa = getattr(a, f"{metric}_std_s" if metric == "latency" else "min_power_std_w")
    sb = getattr(b, f"{metric}_std_s" if metric == "latency" else "min_power_std_w")
    return math.sqrt((sa * sa + sb * sb) / 2.0)


# -- CSV ---------------------------------------------------------------------------

def _key(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value, sort_keys=True)


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        r = row.result
        w.writerow([row.variable, _key(row.value), row.strategy, row.trial, r.frame,
                    _num(r.latency_s), _num(r.total_power_w), _num(r.min_power_w), int(r.feasible)])
    return buf.getvalue()


def frames_to_rows(results: Iterable[FrameResult], variable: str = "", value: Any = "", trial: int = 0) -> list[SweepRow]:
    return [SweepRow(variable, value, r.strategy, trial, r) for r in results]


def parse_csv(text: str) -> list[dict[str, Any]]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        out.append({
            "variable": rec["variable"],
            "value": rec["value"],
            "strategy": rec["strategy"],
            "trial": int(rec["trial"]),
            "frame": int(rec["frame"]),
            "latency_s": float(rec["latency_s"]) if rec["latency_s"] else None,
            "total_power_w": float(rec["total_power_w"]) if rec["total_power_w"] else None,
            "min_power_w": float(rec["min_power_w"]) if rec["min_power_w"] else None,
            "feasible": rec["feasible"] == "1",
        })
    return out


def summary_to_csv(cells: Iterable[CellSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for c in cells:
        w.writerow([c.variable, _key(c.value), c.strategy, c.trials, c.feasible,
                    repr(c.latency_mean_s), repr(c.latency_std_s),
                    repr(c.min_power_mean_w), repr(c.min_power_std_w)])
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")

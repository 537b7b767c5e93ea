"""Per-frame planning strategies sharing one power and allocation pipeline.

``llhr`` alternates placement and allocation: positions are optimised for the
links the current allocation uses, the allocation is re-solved on the new
positions, and so on until the link set repeats. ``heuristic`` moves the
swarm along a fixed cell path and ``random`` drops it on random cells; both
then solve power and allocation exactly like ``llhr``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .allocation import (
    AllocationInfeasible,
    AllocationPlan,
    AllocationProblem,
    SearchLimitExceeded,
    plan_links,
    solve_p3_exact,
)
from .channel import UnreachableReliability, data_rate, pairwise_distances, threshold_power
from .cnn import profile_model
from .model import GridSpec, Scenario, cell_center
from .position import Link, PlacementInfeasible, PositionSolution, solve_p2
from .power import PowerSolution, solve_p1

log = logging.getLogger(__name__)

DEFAULT_NODE_LIMIT = 20_000
RANDOM_ATTEMPTS = 1000


class StrategyKind(str, Enum):
    LLHR = "llhr"
    HEURISTIC = "heuristic"
    RANDOM = "random"


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    seed: int | None = None
    static_path: tuple[int, ...] | None = None
    refine: bool = True
    max_rounds: int = 4
    node_limit: int | None = DEFAULT_NODE_LIMIT

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if (self.seed is not None) != (self.kind is StrategyKind.RANDOM):
            raise StrategyError("a seed is required for the random strategy and only for it")
        if self.static_path is not None:
            if self.kind is not StrategyKind.HEURISTIC:
                raise StrategyError("static_path only applies to the heuristic strategy")
            object.__setattr__(self, "static_path", tuple(int(c) for c in self.static_path))

    @classmethod
    def named(cls, kind: str, seed: int = 0, **kw) -> "Strategy":
        kind = StrategyKind(kind)
        return cls(kind, seed if kind is StrategyKind.RANDOM else None, **kw)


def boustrophedon_path(grid: GridSpec) -> list[int]:
    """Row-by-row lawnmower sweep, reversing direction on every row."""
    path = []
    for row in range(grid.rows):
        cols = range(grid.cols) if row % 2 == 0 else range(grid.cols - 1, -1, -1)
        path.extend(row * grid.cols + c for c in cols)
    return path


# -- shared pipeline ------------------------------------------------------------

def reliable_mask(scenario: Scenario, positions: Sequence[tuple[float, float]], bits: float) -> np.ndarray:
    """``mask[i, k]``: UAV i can send ``bits`` to k within the deadline at or below its power cap."""
    n = scenario.num_uavs
    dist = pairwise_distances(positions)
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        cap = scenario.fleet[i].p_max_w
        for k in range(n):
            if i == k:
                continue
            try:
                mask[i, k] = threshold_power(scenario.channel, bits, float(dist[i, k])) <= cap
            except UnreachableReliability:
                mask[i, k] = False
    return mask


def build_problem(scenario: Scenario, positions: Sequence[tuple[float, float]]) -> AllocationProblem:
    """Allocation instance with every link running at its sender's power cap."""
    n = scenario.num_uavs
    dist = pairwise_distances(positions)
    np.fill_diagonal(dist, 1.0)
    p_max = np.array([f.p_max_w for f in scenario.fleet])
    rates = np.asarray(data_rate(scenario.channel, p_max[:, None], dist), dtype=float).reshape(n, n)
    profile = profile_model(scenario.model)
    masks: dict[float, np.ndarray] = {}

    def mask(bits: float) -> np.ndarray:
        if bits not in masks:
            masks[bits] = reliable_mask(scenario, positions, bits)
        return masks[bits]

    hop = np.array([mask(float(p.output_bits)) for p in profile[:-1]], dtype=bool).reshape(-1, n, n)
    src = np.array([mask(r.input_bits)[r.source_uav] for r in scenario.requests], dtype=bool).reshape(-1, n)
    return AllocationProblem.build(scenario.requests, scenario.fleet, rates, profile, scenario.time_frame_s,
                                   hop_allowed=hop, src_allowed=src)


def allocate(problem: AllocationProblem, node_limit: int | None = DEFAULT_NODE_LIMIT) -> AllocationPlan:
    try:
        return solve_p3_exact(problem, max_nodes=node_limit)
    except SearchLimitExceeded as exc:
        if exc.plan is None:
            raise AllocationInfeasible(f"no allocation found within {node_limit} search nodes") from None
        log.info("allocation search hit %s nodes, keeping the best plan found", node_limit)
        return exc.plan


def _power(scenario: Scenario, positions, plan: AllocationPlan, problem: AllocationProblem) -> PowerSolution:
    return solve_p1(positions, plan_links(plan, problem), scenario.channel, scenario.fleet)


def _fixed(scenario: Scenario, cells: Sequence[int], node_limit: int | None):
    positions = tuple(cell_center(scenario.grid, c) for c in cells)
    problem = build_problem(scenario, positions)
    plan = allocate(problem, node_limit)
    pos = PositionSolution(positions, 0.0, 0, tuple(cells))
    return pos, _power(scenario, positions, plan, problem), plan


def _dedupe(links: Sequence[Link]) -> tuple[Link, ...]:
    best: dict[tuple[int, int], float] = {}
    for i, k, bits in links:
        best[(i, k)] = max(best.get((i, k), 0.0), float(bits))
    return tuple((i, k, b) for (i, k), b in sorted(best.items()))


def first_frame_links(scenario: Scenario) -> tuple[Link, ...]:
    """Chain 0 -> 1 -> ... -> U-1 carrying the smallest payload the model ever sends.

    Dropped entirely when even that payload cannot be sent reliably at the
    minimum separation, since no allocation could use such a link anyway.
    """
    payloads = [r.input_bits for r in scenario.requests]
    payloads += [float(p.output_bits) for p in profile_model(scenario.model)[:-1]]
    if not payloads or scenario.num_uavs < 2:
        return ()
    bits = min(payloads)
    sep = scenario.grid.min_separation_m
    chain = []
    for i in range(scenario.num_uavs - 1):
        try:
            ok = threshold_power(scenario.channel, bits, sep) <= scenario.fleet[i].p_max_w
        except UnreachableReliability:
            ok = False
        if ok:
            chain.append((i, i + 1, bits))
    return tuple(chain)


def _llhr(strategy: Strategy, scenario: Scenario, previous: PositionSolution | None):
    if previous is not None:
        init = previous.positions
    else:
        path = boustrophedon_path(scenario.grid)
        init = tuple(cell_center(scenario.grid, c) for c in path[:scenario.num_uavs])
    links = first_frame_links(scenario)
    seen = {links}
    best = None
    for rnd in range(strategy.max_rounds):
        try:
            pos = solve_p2(links, scenario.grid, scenario.channel, scenario.fleet, init, refine=strategy.refine)
        except PlacementInfeasible:
            if best is None:
                raise
            break
        problem = build_problem(scenario, pos.positions)
        try:
            plan = allocate(problem, strategy.node_limit)
        except AllocationInfeasible:
            if best is None:
                raise
            break
        if best is None or plan.latency_s < best[2].latency_s:
            best = (pos, problem, plan)
        links = _dedupe(plan_links(plan, problem))
        if links in seen:
            break
        seen.add(links)
        init = pos.positions
    pos, problem, plan = best
    return pos, _power(scenario, pos.positions, plan, problem), plan


def random_cells(scenario: Scenario, seed: int, frame: int) -> list[int]:
    rng = np.random.default_rng([seed, frame])
    n, grid = scenario.num_uavs, scenario.grid
    if n > grid.num_cells:
        raise PlacementInfeasible(f"{n} UAVs do not fit in {grid.num_cells} cells")
    sep = grid.min_separation_m
    for _ in range(RANDOM_ATTEMPTS):
        cells = [int(c) for c in rng.integers(0, grid.num_cells, size=n)]
        pts = [cell_center(grid, c) for c in cells]
        if all(math.dist(pts[i], pts[k]) >= sep for i in range(n) for k in range(i + 1, n)):
            return cells
    raise PlacementInfeasible(f"no separated random layout after {RANDOM_ATTEMPTS} draws")


def heuristic_cells(scenario: Scenario, path: Sequence[int], frame: int) -> list[int]:
    grid, n = scenario.grid, scenario.num_uavs
    if any(not 0 <= c < grid.num_cells for c in path):
        raise StrategyError("static path contains cells outside the grid")
    if len(set(path)) < n or len(set(path)) != len(path):
        raise StrategyError(f"static path needs at least {n} distinct cells and no repeats")
    return [path[(frame + i) % len(path)] for i in range(n)]


def run_strategy(
    strategy: Strategy,
    scenario: Scenario,
    frame: int,
    previous: PositionSolution | None = None,
) -> tuple[PositionSolution, PowerSolution, AllocationPlan]:
    if frame < 0:
        raise ValueError("frame must be non-negative")
    if strategy.kind is StrategyKind.LLHR:
        return _llhr(strategy, scenario, previous)
    if strategy.kind is StrategyKind.HEURISTIC:
        path = strategy.static_path or tuple(boustrophedon_path(scenario.grid))
        return _fixed(scenario, heuristic_cells(scenario, path, frame), strategy.node_limit)
    return _fixed(scenario, random_cells(scenario, strategy.seed, frame), strategy.node_limit)

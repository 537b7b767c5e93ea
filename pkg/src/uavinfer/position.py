"""UAV placement minimising the total reliability power of the active links.

With every link at its threshold power, the total power is a positive
combination of squared link distances, sum_l coeff_l * d_l^2. Each UAV is
confined to the disk of radius R around the centre of the cell it is assigned
to, every pair stays at least 2R apart, and no link may need more than its
sender's power cap.

Two phases:

1. discrete: assign UAVs to distinct cell centres. Small instances are
   enumerated exhaustively (lexicographically first optimum wins); larger
   ones use greedy insertion followed by move/swap local search.
2. continuous: Gauss-Seidel descent. Each UAV steps towards the weighted
   centroid of its neighbours, projected onto its disk and pushed out of any
   neighbour's exclusion circle, with backtracking so the objective never
   increases and every constraint keeps holding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import reliability_coefficient
from .model import ChannelParams, GridSpec, UavProfile, cell_center, cell_of

Link = tuple[int, int, float]

EPS_GEOM = 1e-9
_PUSH = 1.0 + 1e-12
_SHRINK = 1.0 - 1e-12


class PlacementInfeasible(ValueError):
    def __init__(self, message: str, min_max_link_power_w: float | None = None) -> None:
        super().__init__(message)
        self.min_max_link_power_w = min_max_link_power_w


@dataclass(frozen=True)
class PositionSolution:
    positions: tuple[tuple[float, float], ...]
    objective_w: float
    iterations: int
    cells: tuple[int, ...] = ()
    discrete_objective_w: float = 0.0
    history: tuple[float, ...] = ()


def candidate_positions(grid: GridSpec) -> list[tuple[float, float]]:
    return [cell_center(grid, c) for c in range(grid.num_cells)]


def _link_coefficients(link_set: Sequence[Link], params: ChannelParams, n: int,
                       link_mode: str) -> dict[tuple[int, int], float]:
    """Directed (i, k) -> coefficient, using the largest payload per pair."""
    bits: dict[tuple[int, int], float] = {}
    for i, k, b in link_set:
        if not (0 <= i < n and 0 <= k < n) or i == k:
            raise ValueError(f"invalid link {i}->{k}")
        bits[(i, k)] = max(bits.get((i, k), 0.0), float(b))
    if link_mode == "all" and bits:
        top = max(bits.values())
        bits = {(i, k): top for i in range(n) for k in range(n) if i != k}
    elif link_mode != "active":
        raise ValueError(f"unknown link_mode {link_mode!r}")
    return {pair: reliability_coefficient(params, b) for pair, b in bits.items()}


class _Layout:
    """Pair weights and distance caps shared by both phases."""

    def __init__(self, coeffs: dict[tuple[int, int], float], profiles: Sequence[UavProfile]) -> None:
        n = len(profiles)
        self.n = n
        self.coeffs = coeffs
        self.weight = np.zeros((n, n))
        self.dmax = np.full((n, n), np.inf)
        for (i, k), c in coeffs.items():
            self.weight[i, k] += c
            self.weight[k, i] += c
            cap = math.sqrt(profiles[i].p_max_w / c)
            self.dmax[i, k] = self.dmax[k, i] = min(self.dmax[i, k], cap)
        top = self.weight.max() if coeffs else 1.0
        # normalised copy keeps decisions identical when all coefficients are rescaled
        self.unit = self.weight / top if top > 0 else self.weight

    def objective(self, pts: np.ndarray) -> float:
        """Exact objective in watts."""
        total = 0.0
        for (i, k), c in self.coeffs.items():
            dx, dy = pts[i] - pts[k]
            total += c * (dx * dx + dy * dy)
        return total

    def unit_objective(self, pts: np.ndarray) -> float:
        diff = pts[:, None, :] - pts[None, :, :]
        d2 = (diff**2).sum(-1)
        return float(np.triu(self.unit * d2, 1).sum())

    def caps_ok(self, pts: np.ndarray) -> bool:
        diff = pts[:, None, :] - pts[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        return bool(np.all(d <= self.dmax))


# -- discrete phase -----------------------------------------------------------

def _exhaustive(layout: _Layout, centers: np.ndarray) -> tuple[int, ...] | None:
    n, m = layout.n, len(centers)
    perms = np.array(list(itertools.permutations(range(m), n)), dtype=np.int64).reshape(-1, n)
    cost = np.zeros(len(perms))
    feasible = np.ones(len(perms), dtype=bool)
    for i in range(n):
        for k in range(i + 1, n):
            if layout.weight[i, k] == 0:
                continue
            diff = centers[perms[:, i]] - centers[perms[:, k]]
            d2 = (diff**2).sum(-1)
            cost += layout.unit[i, k] * d2
            feasible &= np.sqrt(d2) <= layout.dmax[i, k]
    if not feasible.any():
        return None
    cost[~feasible] = np.inf
    return tuple(int(c) for c in perms[int(np.argmin(cost))])


def _greedy(layout: _Layout, centers: np.ndarray, init_cells: Sequence[int]) -> list[int]:
    n, m = layout.n, len(centers)
    w = layout.unit
    strength = w.sum(1)
    cells = [-1] * n
    taken = np.zeros(m, dtype=bool)

    def nearest_free(cell: int) -> int:
        d2 = ((centers - centers[cell]) ** 2).sum(-1)
        d2[taken] = np.inf
        return int(np.argmin(d2))

    placed: list[int] = []
    while len(placed) < n:
        rest = [i for i in range(n) if cells[i] < 0]
        pull = [w[i, placed].sum() if placed else 0.0 for i in rest]
        best = max(range(len(rest)), key=lambda t: (pull[t], strength[rest[t]], -rest[t]))
        i = rest[best]
        if pull[best] == 0:
            cell = nearest_free(init_cells[i])
        else:
            cost = np.zeros(m)
            ok = ~taken
            for k in placed:
                if w[i, k] == 0:
                    continue
                d2 = ((centers - centers[cells[k]]) ** 2).sum(-1)
                cost += w[i, k] * d2
                ok &= np.sqrt(d2) <= layout.dmax[i, k]
            if not ok.any():
                ok = ~taken
            cost[~ok] = np.inf
            cell = int(np.argmin(cost))
        cells[i] = cell
        taken[cell] = True
        placed.append(i)
    return cells


def _assignment_cost(layout: _Layout, centers: np.ndarray, cells: Sequence[int]) -> float:
    pts = centers[list(cells)]
    if not layout.caps_ok(pts):
        return math.inf
    return layout.unit_objective(pts)


def _local_search(layout: _Layout, centers: np.ndarray, cells: list[int], max_passes: int = 50) -> list[int]:
    n, m = layout.n, len(centers)
    current = _assignment_cost(layout, centers, cells)
    for _ in range(max_passes):
        improved = False
        for i in range(n):
            occupant = {c: j for j, c in enumerate(cells)}
            for c in range(m):
                if c == cells[i]:
                    continue
                trial = list(cells)
                j = occupant.get(c)
                if j is not None:
                    trial[j] = cells[i]
                trial[i] = c
                cost = _assignment_cost(layout, centers, trial)
                if cost < current * _SHRINK - 1e-300:
                    cells, current, improved = trial, cost, True
                    occupant = {cc: jj for jj, cc in enumerate(cells)}
        if not improved:
            break
    return cells


# -- continuous phase ---------------------------------------------------------

def _project_disk(p: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    v = p - center
    r = math.hypot(v[0], v[1])
    limit = radius * _SHRINK
    if r <= limit:
        return p
    return center + v * (limit / r)


def _feasible_for(i: int, p: np.ndarray, pts: np.ndarray, center: np.ndarray, radius: float,
                  sep: float, dmax: np.ndarray) -> bool:
    if math.hypot(*(p - center)) > radius:
        return False
    for k in range(len(pts)):
        if k == i:
            continue
        d = math.hypot(p[0] - pts[k, 0], p[1] - pts[k, 1])
        if d < sep or d > dmax[i, k]:
            return False
    return True


def _refine(layout: _Layout, pts: np.ndarray, centers: np.ndarray, radius: float, sep: float,
            max_sweeps: int) -> tuple[np.ndarray, list[float], int]:
    pts = pts.copy()
    w = layout.unit
    history = [layout.objective(pts)]
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = False
        floor = 1e-12 * layout.unit_objective(pts)
        for i in range(layout.n):
            wi = w[i]
            total = wi.sum()
            if total == 0:
                continue
            local = lambda p: float((wi * ((pts - p) ** 2).sum(-1)).sum())  # noqa: E731
            here = local(pts[i])
            target = (wi[:, None] * pts).sum(0) / total
            target = _project_disk(target, centers[i], radius)
            for _repair in range(3):
                clash = [k for k in range(layout.n)
                         if k != i and math.hypot(*(target - pts[k])) < sep]
                if not clash:
                    break
                for k in clash:
                    v = target - pts[k]
                    r = math.hypot(v[0], v[1])
                    if r > 0:
                        target = pts[k] + v * (sep * _PUSH / r)
                target = _project_disk(target, centers[i], radius)
            step = 1.0
            for _ls in range(40):
                cand = pts[i] + step * (target - pts[i])
                if (_feasible_for(i, cand, pts, centers[i], radius, sep, layout.dmax)
                        and local(cand) < here - floor):
                    pts[i] = cand
                    moved = True
                    break
                step *= 0.5
        history.append(layout.objective(pts))
        if not moved or history[-1] >= history[-2] * (1 - 1e-12):
            break
    return pts, history, sweeps


# -- driver -------------------------------------------------------------------

def _check_start(grid: GridSpec, init: np.ndarray, sep: float) -> list[int]:
    cells = []
    for idx, (x, y) in enumerate(init):
        cell = cell_of(grid, x, y)
        cx, cy = cell_center(grid, cell)
        if math.hypot(x - cx, y - cy) > grid.cell_radius_m:
            raise PlacementInfeasible(f"initial position of UAV {idx} ({x}, {y}) lies outside its cell disk")
        cells.append(cell)
    n = len(init)
    for i in range(n):
        for k in range(i + 1, n):
            if math.hypot(*(init[i] - init[k])) < sep:
                raise PlacementInfeasible(f"initial positions of UAVs {i} and {k} are closer than {sep} m")
    return cells


def solve_p2(
    link_set: Sequence[Link],
    grid: GridSpec,
    params: ChannelParams,
    profiles: Sequence[UavProfile],
    init: Sequence[tuple[float, float]],
    *,
    link_mode: str = "active",
    exhaustive_limit: int = 50_000,
    max_sweeps: int = 200,
    refine: bool = True,
) -> PositionSolution:
    n = len(profiles)
    if len(init) != n:
        raise ValueError(f"{len(init)} initial positions for {n} UAVs")
    if n > grid.num_cells:
        raise PlacementInfeasible(f"{n} UAVs do not fit in {grid.num_cells} cells")
    sep = grid.min_separation_m
    radius = grid.cell_radius_m
    start = np.asarray(init, dtype=float).reshape(n, 2)
    init_cells = _check_start(grid, start, sep)

    coeffs = _link_coefficients(link_set, params, n, link_mode)
    layout = _Layout(coeffs, profiles)
    worst = max((c * sep * sep for c in coeffs.values()), default=0.0)
    if any(c * sep * sep > profiles[i].p_max_w for (i, _), c in coeffs.items()):
        raise PlacementInfeasible(
            f"some link exceeds its power cap even at the minimum separation {sep} m", worst)

    centers = np.asarray(candidate_positions(grid))
    if not coeffs:
        obj = 0.0
        return PositionSolution(tuple(map(tuple, start.tolist())), obj, 0, tuple(init_cells), obj, (obj,))

    if math.perm(len(centers), n) <= exhaustive_limit:
        cells = _exhaustive(layout, centers)
        if cells is None:
            raise PlacementInfeasible("no cell assignment satisfies the power caps", worst)
        cells = list(cells)
    else:
        cells = _local_search(layout, centers, _greedy(layout, centers, init_cells))
    discrete_pts = centers[cells]
    if not layout.caps_ok(discrete_pts):
        raise PlacementInfeasible("no cell assignment found that satisfies the power caps", worst)
    discrete_obj = layout.objective(discrete_pts)

    runs = []
    starts = [(discrete_pts, cells)]
    if layout.caps_ok(start):
        starts.append((start, init_cells))
    for pts0, cells0 in starts:
        cell_centers = centers[list(cells0)]
        if refine:
            pts, hist, sweeps = _refine(layout, pts0, cell_centers, radius, sep, max_sweeps)
        else:
            pts, hist, sweeps = pts0, [layout.objective(pts0)], 0
        runs.append((hist[-1], pts, hist, sweeps, cells0))
    # strict improvement needed to prefer the initial layout over the cell optimum
    best = runs[0]
    for run in runs[1:]:
        if run[0] < best[0]:
            best = run
    obj, pts, hist, sweeps, best_cells = best
    return PositionSolution(
        positions=tuple((float(x), float(y)) for x, y in pts),
        objective_w=float(obj),
        iterations=sweeps,
        cells=tuple(int(c) for c in best_cells),
        discrete_objective_w=float(discrete_obj),
        history=tuple(float(h) for h in hist),
    )

"""Assignment of CNN layers of every request to UAVs.

Latency is the sequential sum the planner minimises: for every request, the
transfer of its input from the source UAV to the UAV running layer 1 (free if
they coincide), every layer's compute time ``c_j / e_i``, and every transfer
of an intermediate tensor between consecutive layers placed on different
UAVs. Memory and per-frame compute budgets are shared by all requests.

Solvers:

* :func:`solve_p3_exact` - depth-first branch-and-bound over the (request,
  layer) choices in lexicographic order. The bound relaxes the coupling
  between requests and solves each remaining request's chain as a shortest
  path over the (layer x UAV) lattice, only allowing UAVs whose residual
  capacity still fits the layer.
* :func:`solve_p3_greedy` - the same chain DP, one request at a time in id
  order, consuming capacity as it goes.
* :func:`brute_force_p3` - full enumeration, for tests.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .cnn import LayerProfile
from .model import Request, UavProfile

REL_TOL = 1e-12
BRUTE_FORCE_LIMIT = 10**7


class AllocationInfeasible(ValueError):
    def __init__(self, message: str, resource: str = "") -> None:
        super().__init__(message)
        self.resource = resource


class SearchLimitExceeded(RuntimeError):
    """Branch-and-bound gave up after its node budget; ``plan`` is the best plan seen, if any."""

    def __init__(self, message: str, plan: "AllocationPlan | None" = None) -> None:
        super().__init__(message)
        self.plan = plan


class Breakdown(NamedTuple):
    source_tx_s: float
    compute_s: float
    inter_tx_s: float


@dataclass(frozen=True)
class AllocationProblem:
    """Everything the layer allocation needs, with UAVs indexed 0..U-1.

    ``hop_allowed[j, i, k]`` says whether the tensor leaving layer ``j`` may go
    from UAV ``i`` to ``k`` (the reliability threshold fits the power cap);
    ``src_allowed[r, k]`` does the same for request ``r``'s input.
    """

    sources: tuple[int, ...]
    input_bits: tuple[float, ...]
    loads: tuple[int, ...]
    memory: tuple[int, ...]
    inter_bits: tuple[int, ...]
    mult_rate: np.ndarray
    mem_cap: np.ndarray
    comp_cap: np.ndarray
    rates: np.ndarray
    hop_allowed: np.ndarray | None = None
    src_allowed: np.ndarray | None = None

    @classmethod
    def build(
        cls,
        requests: Sequence[Request],
        fleet: Sequence[UavProfile],
        rates: np.ndarray,
        model_profile: Sequence[LayerProfile],
        time_frame_s: float,
        *,
        hop_allowed: np.ndarray | None = None,
        src_allowed: np.ndarray | None = None,
    ) -> "AllocationProblem":
        return cls(
            sources=tuple(r.source_uav for r in requests),
            input_bits=tuple(r.input_bits for r in requests),
            loads=tuple(p.load for p in model_profile),
            memory=tuple(p.memory_bytes for p in model_profile),
            inter_bits=tuple(p.output_bits for p in model_profile[:-1]),
            mult_rate=np.array([f.mult_per_sec for f in fleet], dtype=float),
            mem_cap=np.array([f.mem_capacity_bytes for f in fleet], dtype=float),
            comp_cap=np.array([f.compute_budget(time_frame_s) for f in fleet], dtype=float),
            rates=np.asarray(rates, dtype=float),
            hop_allowed=hop_allowed,
            src_allowed=src_allowed,
        )

    @property
    def num_requests(self) -> int:
        return len(self.sources)

    @property
    def num_layers(self) -> int:
        return len(self.loads)

    @property
    def num_uavs(self) -> int:
        return len(self.mult_rate)


@dataclass(frozen=True)
class AllocationPlan:
    assign: tuple[tuple[int, ...], ...]
    latency_s: float
    breakdown: Breakdown
    method: str = ""
    nodes: int = 0
    per_request_s: tuple[float, ...] = field(default=())

    def uav_for(self, request: int, layer: int) -> int:
        return self.assign[request][layer]


# -- latency ------------------------------------------------------------------

def _rate(problem: AllocationProblem, i: int, k: int) -> float:
    rho = problem.rates[i, k]
    if not rho > 0:
        raise ValueError(f"link {i}->{k} has zero rate")
    return float(rho)


def request_latency(assign_r: Sequence[int], r: int, problem: AllocationProblem) -> Breakdown:
    src = problem.sources[r]
    first = assign_r[0]
    source_tx = problem.input_bits[r] / _rate(problem, src, first) if first != src else 0.0
    compute = 0.0
    for j, i in enumerate(assign_r):
        compute += problem.loads[j] / problem.mult_rate[i]
    inter = 0.0
    for j in range(len(assign_r) - 1):
        a, b = assign_r[j], assign_r[j + 1]
        if a != b:
            inter += problem.inter_bits[j] / _rate(problem, a, b)
    return Breakdown(source_tx, float(compute), inter)


def plan_latency(assign: Sequence[Sequence[int]], problem: AllocationProblem) -> tuple[float, Breakdown]:
    if len(assign) != problem.num_requests or any(len(a) != problem.num_layers for a in assign):
        raise ValueError("assignment must cover every (request, layer)")
    u = problem.num_uavs
    if any(not 0 <= i < u for a in assign for i in a):
        raise ValueError("assignment refers to an unknown UAV")
    parts = [request_latency(a, r, problem) for r, a in enumerate(assign)]
    breakdown = Breakdown(*(float(sum(p[n] for p in parts)) for n in range(3)))
    return breakdown.source_tx_s + breakdown.compute_s + breakdown.inter_tx_s, breakdown


def _make_plan(assign, problem: AllocationProblem, method: str, nodes: int = 0) -> AllocationPlan:
    assign = tuple(tuple(int(i) for i in a) for a in assign)
    latency, breakdown = plan_latency(assign, problem)
    per_request = tuple(sum(request_latency(a, r, problem)) for r, a in enumerate(assign))
    return AllocationPlan(assign, latency, breakdown, method, nodes, per_request)


def plan_links(plan: AllocationPlan, problem: AllocationProblem) -> list[tuple[int, int, float]]:
    """Directed transmissions (sender, receiver, bits) the plan performs."""
    links = []
    for r, a in enumerate(plan.assign):
        src = problem.sources[r]
        if a[0] != src:
            links.append((src, a[0], problem.input_bits[r]))
        for j in range(len(a) - 1):
            if a[j] != a[j + 1]:
                links.append((a[j], a[j + 1], float(problem.inter_bits[j])))
    return links


def plan_table(plan: AllocationPlan, problem: AllocationProblem) -> list[dict]:
    """One record per (request, layer): UAV, incoming transfer, compute, running total."""
    rows = []
    running = 0.0
    for r, a in enumerate(plan.assign):
        src = problem.sources[r]
        for j, i in enumerate(a):
            prev = src if j == 0 else a[j - 1]
            bits = problem.input_bits[r] if j == 0 else problem.inter_bits[j - 1]
            tx = bits / _rate(problem, prev, i) if prev != i else 0.0
            comp = problem.loads[j] / float(problem.mult_rate[i])
            running += tx + comp
            rows.append({"request": r, "layer": j, "uav": i, "tx_in_s": tx,
                         "compute_s": comp, "hop_latency_s": tx + comp, "cumulative_s": running})
    return rows


def capacity_violations(assign: Sequence[Sequence[int]], problem: AllocationProblem) -> list[str]:
    u = problem.num_uavs
    mem = np.zeros(u)
    comp = np.zeros(u)
    for a in assign:
        for j, i in enumerate(a):
            mem[i] += problem.memory[j]
            comp[i] += problem.loads[j]
    out = []
    for i in range(u):
        if mem[i] > problem.mem_cap[i]:
            out.append(f"UAV {i} memory {mem[i]:.0f} B > {problem.mem_cap[i]:.0f} B")
        if comp[i] > problem.comp_cap[i]:
            out.append(f"UAV {i} compute {comp[i]:.0f} > {problem.comp_cap[i]:.0f} multiplications")
    return out


# -- shared cost tables ---------------------------------------------------------

class _Costs:
    def __init__(self, problem: AllocationProblem) -> None:
        u, n_layers = problem.num_uavs, problem.num_layers
        rates = problem.rates
        with np.errstate(divide="ignore"):
            inv = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
        np.fill_diagonal(inv, 0.0)
        self.hop = np.empty((max(n_layers - 1, 0), u, u))
        for j, bits in enumerate(problem.inter_bits):
            h = bits * inv
            np.fill_diagonal(h, 0.0)
            if problem.hop_allowed is not None:
                h = np.where(problem.hop_allowed[j] | np.eye(u, dtype=bool), h, np.inf)
            self.hop[j] = h
        self.src = np.empty((problem.num_requests, u))
        for r, (s, bits) in enumerate(zip(problem.sources, problem.input_bits)):
            row = bits * inv[s]
            row[s] = 0.0
            if problem.src_allowed is not None:
                row = np.where(problem.src_allowed[r] | (np.arange(u) == s), row, np.inf)
            self.src[r] = row
        self.comp = np.array(problem.loads, dtype=float)[:, None] / problem.mult_rate[None, :]
        self.memory = np.array(problem.memory, dtype=float)
        self.loads = np.array(problem.loads, dtype=float)

        self.hop_move = self.hop.copy()
        for h in self.hop_move:
            np.fill_diagonal(h, np.inf)
        self.cum_load = np.concatenate([[0.0], np.cumsum(self.loads)])
        self.cum_mem = np.concatenate([[0.0], np.cumsum(self.memory)])

    def run_fit(self, res_mem: np.ndarray, res_comp: np.ndarray) -> np.ndarray:
        """``fit[s, t, i]``: layers s..t run back to back fit in UAV i's residual capacity."""
        load = self.cum_load[None, 1:] - self.cum_load[:-1, None]
        mem = self.cum_mem[None, 1:] - self.cum_mem[:-1, None]
        return (load[:, :, None] <= res_comp[None, None, :]) & (mem[:, :, None] <= res_mem[None, None, :])

    def _dp(self, r: int, start: int, prev: int | None, fit: np.ndarray, back: list | None):
        """Chain DP over states (UAV, first layer of its current run) from layer ``start``.

        A run of consecutive layers on one UAV must fit that UAV's residual
        capacity as a whole; revisiting a UAV later in the chain is not
        charged against the earlier run, so this stays a relaxation.
        """
        n_layers, u = self.comp.shape
        cost = np.full((u, n_layers), np.inf)
        first = (self.src[r] if start == 0 else self.hop[start - 1][prev]) + self.comp[start]
        cost[:, start] = np.where(fit[start, start], first, np.inf)
        cols = np.arange(u)
        for j in range(start + 1, n_layers):
            stay = np.where(fit[:, j, :].T, cost + self.comp[j][:, None], np.inf)
            best_run = cost.argmin(1)
            total = cost[cols, best_run][:, None] + self.hop_move[j - 1]
            came = total.argmin(0)
            stay[:, j] = np.where(fit[j, j], total[came, cols] + self.comp[j], np.inf)
            if back is not None:
                back.append((came, best_run[came]))
            cost = stay
        return cost

    def chain(self, r: int, start: int, prev: int | None, fit: np.ndarray) -> float:
        """Lower bound on completing request ``r`` from layer ``start``."""
        if start >= self.comp.shape[0]:
            return 0.0
        return float(self._dp(r, start, prev, fit, None).min())

    def chain_path(self, r: int, start: int, prev: int | None, fit: np.ndarray) -> list[int] | None:
        back: list = []
        cost = self._dp(r, start, prev, fit, back)
        flat = int(cost.argmin())
        if not np.isfinite(cost.flat[flat]):
            return None
        i, s = divmod(flat, cost.shape[1])
        path = [i]
        for j in range(cost.shape[1] - 1, start, -1):
            if s == j:
                came, run = back[j - start - 1]
                i, s = int(came[i]), int(run[i])
            path.append(i)
        return path[::-1]


def check_capacity(problem: AllocationProblem) -> None:
    n_req = problem.num_requests
    need_mem = n_req * sum(problem.memory)
    need_comp = n_req * sum(problem.loads)
    if need_mem > problem.mem_cap.sum():
        raise AllocationInfeasible(
            f"memory demand {need_mem:.0f} B exceeds fleet capacity {problem.mem_cap.sum():.0f} B", "memory")
    if need_comp > problem.comp_cap.sum():
        raise AllocationInfeasible(
            f"compute demand {need_comp:.0f} exceeds fleet budget {problem.comp_cap.sum():.0f} multiplications",
            "compute")
    for j, (m, c) in enumerate(zip(problem.memory, problem.loads)):
        if not np.any((problem.mem_cap >= m) & (problem.comp_cap >= c)):
            raise AllocationInfeasible(f"layer {j} fits on no UAV", "memory" if m > problem.mem_cap.max() else "compute")


# -- greedy -------------------------------------------------------------------

def solve_p3_greedy(problem: AllocationProblem) -> AllocationPlan:
    check_capacity(problem)
    costs = _Costs(problem)
    res_mem = problem.mem_cap.astype(float).copy()
    res_comp = problem.comp_cap.astype(float).copy()
    assign = []
    for r in range(problem.num_requests):
        fixed: list[int] = []
        while len(fixed) < problem.num_layers:
            prev = fixed[-1] if fixed else None
            path = costs.chain_path(r, len(fixed), prev, costs.run_fit(res_mem, res_comp))
            if path is None:
                raise AllocationInfeasible(f"greedy allocation found no placement for request {r}")
            # commit layers until one no longer fits after its predecessors consumed capacity
            for i in path:
                j = len(fixed)
                if problem.memory[j] > res_mem[i] or problem.loads[j] > res_comp[i]:
                    break
                res_mem[i] -= problem.memory[j]
                res_comp[i] -= problem.loads[j]
                fixed.append(i)
        assign.append(fixed)
    return _make_plan(assign, problem, "greedy")


# -- branch and bound -----------------------------------------------------------

def solve_p3_exact(problem: AllocationProblem, *, max_nodes: int | None = None) -> AllocationPlan:
    check_capacity(problem)
    costs = _Costs(problem)
    n_req, n_layers, u = problem.num_requests, problem.num_layers, problem.num_uavs
    if n_req == 0:
        return _make_plan([], problem, "exact")
    res_mem = problem.mem_cap.astype(float).copy()
    res_comp = problem.comp_cap.astype(float).copy()
    memory, loads = problem.memory, problem.loads

    best_cost = math.inf
    best_assign: list[list[int]] | None = None
    from_search = False
    try:
        seed_plan = solve_p3_greedy(problem)
        best_cost = seed_plan.latency_s
        best_assign = [list(a) for a in seed_plan.assign]
    except AllocationInfeasible:
        pass

    future_cache: dict[tuple[bytes, int], float] = {}

    def future(first: int, fit: np.ndarray) -> float:
        key = (fit.tobytes(), first)
        hit = future_cache.get(key)
        if hit is None:
            hit = sum(costs.chain(r, 0, None, fit) for r in range(first, n_req))
            future_cache[key] = hit
        return hit

    def prunable(bound: float) -> bool:
        if not math.isfinite(bound):
            return True
        tol = REL_TOL * max(abs(best_cost), 1e-300) if math.isfinite(best_cost) else 0.0
        if from_search:
            return bound >= best_cost - tol
        return bound > best_cost + tol

    current = [[0] * n_layers for _ in range(n_req)]
    nodes = 0

    def visit(pos: int, cost: float) -> None:
        nonlocal best_cost, best_assign, from_search, nodes
        if pos == n_req * n_layers:
            tol = REL_TOL * max(abs(best_cost), 1e-300) if math.isfinite(best_cost) else 0.0
            if cost < best_cost - tol or (not from_search and cost <= best_cost + tol):
                best_cost = min(cost, best_cost) if from_search else cost
                best_assign = [list(a) for a in current]
                from_search = True
            return
        nodes += 1
        if max_nodes is not None and nodes > max_nodes:
            incumbent = _make_plan(best_assign, problem, "exact_limited", nodes) if best_assign else None
            raise SearchLimitExceeded(f"branch-and-bound exceeded {max_nodes} nodes", incumbent)
        r, j = divmod(pos, n_layers)
        prev = current[r][j - 1] if j > 0 else None
        for i in range(u):
            if memory[j] > res_mem[i] or loads[j] > res_comp[i]:
                continue
            step = (costs.src[r][i] if j == 0 else costs.hop[j - 1][prev, i]) + costs.comp[j, i]
            if not math.isfinite(step):
                continue
            new_cost = cost + step
            if prunable(new_cost):
                continue
            res_mem[i] -= memory[j]
            res_comp[i] -= loads[j]
            fit = costs.run_fit(res_mem, res_comp)
            bound = new_cost + costs.chain(r, j + 1, i, fit) + future(r + 1, fit)
            if not prunable(bound):
                current[r][j] = i
                visit(pos + 1, new_cost)
            res_mem[i] += memory[j]
            res_comp[i] += loads[j]

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n_req * n_layers + 100))
    try:
        visit(0, 0.0)
    finally:
        sys.setrecursionlimit(limit)
    if best_assign is None:
        raise AllocationInfeasible("no allocation satisfies the capacity and reliability constraints")
    return _make_plan(best_assign, problem, "exact", nodes)


# -- brute force ----------------------------------------------------------------

def _vector_latency(assign: np.ndarray, problem: AllocationProblem, costs: _Costs) -> np.ndarray:
    """Latency of each row of ``assign`` (shape N x R x L); inf when infeasible."""
    n, n_req, n_layers = assign.shape
    total = np.zeros(n)
    for r in range(n_req):
        total += costs.src[r][assign[:, r, 0]]
        for j in range(n_layers):
            total += costs.comp[j][assign[:, r, j]]
            if j + 1 < n_layers:
                total += costs.hop[j][assign[:, r, j], assign[:, r, j + 1]]
    for i in range(problem.num_uavs):
        on_i = assign == i
        mem = (on_i * costs.memory[None, None, :]).sum((1, 2))
        comp = (on_i * costs.loads[None, None, :]).sum((1, 2))
        total[(mem > problem.mem_cap[i]) | (comp > problem.comp_cap[i])] = np.inf
    return total


def brute_force_p3(problem: AllocationProblem, *, chunk: int = 200_000) -> AllocationPlan:
    n_req, n_layers, u = problem.num_requests, problem.num_layers, problem.num_uavs
    n_vars = n_req * n_layers
    count = u**n_vars
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"{count} assignments exceed the brute-force limit {BRUTE_FORCE_LIMIT}")
    costs = _Costs(problem)
    weights = u ** np.arange(n_vars - 1, -1, -1)
    best = math.inf
    best_idx = -1
    for lo in range(0, count, chunk):
        idx = np.arange(lo, min(lo + chunk, count))
        digits = (idx[:, None] // weights[None, :]) % u
        lat = _vector_latency(digits.reshape(-1, n_req, n_layers), problem, costs)
        m = lat.min()
        if not np.isfinite(m):
            continue
        tol = REL_TOL * abs(min(m, best))
        if m < best - tol:
            # lexicographically first row within tolerance of the chunk minimum
            best_idx = int(idx[np.argmax(lat <= m + tol)])
            best = m
    if best_idx < 0:
        raise AllocationInfeasible("no allocation satisfies the capacity and reliability constraints")
    digits = [(best_idx // int(w)) % u for w in weights]
    assign = [digits[r * n_layers:(r + 1) * n_layers] for r in range(n_req)]
    return _make_plan(assign, problem, "brute_force", count)


def enumerate_assignments(u: int, n_req: int, n_layers: int):
    """All assignments in lexicographic order (handy for tiny oracles)."""
    for flat in itertools.product(range(u), repeat=n_req * n_layers):
        yield [list(flat[r * n_layers:(r + 1) * n_layers]) for r in range(n_req)]

"""Standalone constraint checker for emitted plans.

Recomputes everything from the scenario instead of trusting solver output:
per-UAV memory and compute load, one UAV per (request, layer), transmit
powers within caps and above every used link's reliability threshold, pair
separation and containment in the assigned cell disk.
"""

from __future__ import annotations

import math

from .allocation import AllocationPlan
from .channel import ChannelError, UnreachableReliability, threshold_power
from .cnn import profile_model
from .model import Scenario, cell_center
from .position import PositionSolution
from .power import PowerSolution

POWER_RTOL = 1e-9


def violations(scenario: Scenario, pos: PositionSolution, power: PowerSolution, plan: AllocationPlan) -> list[str]:
    out: list[str] = []
    n = scenario.num_uavs
    grid = scenario.grid
    profile = profile_model(scenario.model)
    n_layers = len(profile)

    # one UAV per (request, layer)
    if len(plan.assign) != len(scenario.requests):
        out.append(f"plan covers {len(plan.assign)} requests, scenario has {len(scenario.requests)}")
    for r, row in enumerate(plan.assign):
        if len(row) != n_layers:
            out.append(f"request {r} assigns {len(row)} layers, model has {n_layers}")
        for j, i in enumerate(row):
            if not (isinstance(i, int) and 0 <= i < n):
                out.append(f"request {r} layer {j} assigned to unknown UAV {i!r}")
    if out:
        return out

    mem = [0] * n
    comp = [0] * n
    for row in plan.assign:
        for j, i in enumerate(row):
            mem[i] += profile[j].memory_bytes
            comp[i] += profile[j].load
    for i, prof in enumerate(scenario.fleet):
        if mem[i] > prof.mem_capacity_bytes:
            out.append(f"UAV {i} memory {mem[i]} B exceeds {prof.mem_capacity_bytes} B")
        if comp[i] > prof.compute_budget(scenario.time_frame_s):
            out.append(f"UAV {i} compute {comp[i]} exceeds {prof.compute_budget(scenario.time_frame_s)}")

    if len(pos.positions) != n or len(power.powers_w) != n:
        return out + ["position or power vector has the wrong length"]
    for i, (p, prof) in enumerate(zip(power.powers_w, scenario.fleet)):
        if not 0 <= p <= prof.p_max_w:
            out.append(f"UAV {i} power {p} W outside [0, {prof.p_max_w}]")

    links = []
    for r, row in enumerate(plan.assign):
        src = scenario.requests[r].source_uav
        if row[0] != src:
            links.append((src, row[0], scenario.requests[r].input_bits))
        for j in range(n_layers - 1):
            if row[j] != row[j + 1]:
                links.append((row[j], row[j + 1], profile[j].output_bits))
    for i, k, bits in links:
        d = math.dist(pos.positions[i], pos.positions[k])
        try:
            need = threshold_power(scenario.channel, bits, d)
        except UnreachableReliability:
            out.append(f"link {i}->{k} with {bits} bits can never be reliable")
            continue
        except ChannelError as exc:
            out.append(f"link {i}->{k}: {exc}")
            continue
        if power.powers_w[i] < need * (1 - POWER_RTOL):
            out.append(f"UAV {i} power {power.powers_w[i]} W below the {need} W that link {i}->{k} needs")

    sep = grid.min_separation_m
    for i in range(n):
        for k in range(i + 1, n):
            d = math.dist(pos.positions[i], pos.positions[k])
            if d < sep:
                out.append(f"UAVs {i} and {k} are {d} m apart, below {sep} m")
    if pos.cells:
        for i, (xy, cell) in enumerate(zip(pos.positions, pos.cells)):
            if math.dist(xy, cell_center(grid, cell)) > grid.cell_radius_m:
                out.append(f"UAV {i} leaves the disk of cell {cell}")
    return out

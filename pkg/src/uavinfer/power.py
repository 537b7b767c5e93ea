"""Minimum total transmit power that keeps every active link reliable.

The problem is separable: each UAV's power only has lower bounds coming from
its own outgoing links, so the optimum is the largest per-link threshold
(or zero for a UAV that does not transmit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import UnreachableReliability, threshold_power
from .model import ChannelParams, UavProfile

Link = tuple[int, int, float]  # (sender, receiver, payload bits)


class PowerInfeasible(ValueError):
    def __init__(self, link: Link, threshold_w: float, p_max_w: float) -> None:
        i, k, bits = link
        super().__init__(
            f"link {i}->{k} carrying {bits:g} bits needs {threshold_w:.6g} W, above the cap {p_max_w:.6g} W"
        )
        self.link = link
        self.threshold_w = threshold_w
        self.p_max_w = p_max_w


@dataclass(frozen=True)
class PowerSolution:
    powers_w: tuple[float, ...]
    total_w: float
    binding_links: tuple[tuple[int, int], ...] = field(default=())


def solve_p1(
    positions: Sequence[tuple[float, float]],
    link_set: Sequence[Link],
    params: ChannelParams,
    profiles: Sequence[UavProfile],
) -> PowerSolution:
    n = len(profiles)
    if len(positions) != n:
        raise ValueError(f"{len(positions)} positions for {n} UAVs")
    pts = np.asarray(positions, dtype=float).reshape(n, 2)
    powers = [0.0] * n
    binding: list[tuple[int, int] | None] = [None] * n
    for link in link_set:
        i, k, bits = link
        if not (0 <= i < n and 0 <= k < n) or i == k:
            raise ValueError(f"invalid link {i}->{k}")
        d = float(np.hypot(*(pts[i] - pts[k])))
        try:
            th = threshold_power(params, bits, d)
        except UnreachableReliability:
            raise PowerInfeasible(link, float("inf"), profiles[i].p_max_w) from None
        if th > profiles[i].p_max_w:
            raise PowerInfeasible(link, th, profiles[i].p_max_w)
        if th > powers[i]:
            powers[i] = th
            binding[i] = (i, k)
    return PowerSolution(tuple(powers), float(sum(powers)), tuple(b for b in binding if b is not None))

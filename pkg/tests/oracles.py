"""Reference evaluators written independently of the package.

They follow the textbook formulas literally (high precision via mpmath where
rounding matters) and never import solver internals.
"""

from __future__ import annotations

import itertools
import math

import mpmath

mpmath.mp.dps = 50


def conv_load(n_in, s, n_out, z):
    return n_in * s * s * n_out * z * z


def fc_load(n_in, n_out):
    return n_in * n_out


def memory_bits(w, b):
    return w * b


def gain(h0, d):
    d = max(mpmath.mpf(d), 1)
    return mpmath.mpf(h0) / (d * d)


def rate(h0, noise, bandwidth, p, d):
    snr = gain(h0, d) * mpmath.mpf(p) / mpmath.mpf(noise)
    return mpmath.mpf(bandwidth) * mpmath.log(1 + snr, 2)


def threshold(h0, noise, bandwidth, tau, k, d):
    """Power P with rate(P) * tau == k, solved from 2**(k / (B tau)) - 1 == SNR."""
    need_snr = mpmath.power(2, mpmath.mpf(k) / (mpmath.mpf(bandwidth) * mpmath.mpf(tau))) - 1
    return need_snr * mpmath.mpf(noise) / gain(h0, d)


def rel_err(a, b):
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    if b == 0:
        return abs(a)
    return float(abs(a - b) / abs(b))


def latency(assign, sources, input_bits, loads, inter_bits, mult_rate, rates):
    """Sequential latency: source upload, every layer's compute, every inter-UAV hop."""
    total = 0.0
    for r, row in enumerate(assign):
        if row[0] != sources[r]:
            total += input_bits[r] / rates[sources[r]][row[0]]
        for j, uav in enumerate(row):
            total += loads[j] / mult_rate[uav]
            if j + 1 < len(row) and row[j + 1] != uav:
                total += inter_bits[j] / rates[uav][row[j + 1]]
    return total


def p1_grid(positions, links, h0, noise, bandwidth, tau, p_max, steps=10_000):
    """Cheapest grid power per UAV whose links all meet rate * tau >= bits; None if none."""
    powers = []
    for i in range(len(positions)):
        mine = [(k, bits) for (s, k, bits) in links if s == i]
        if not mine:
            powers.append(0.0)
            continue
        found = None
        # binary search over grid indices; feasibility is monotone in power
        lo, hi = 0, steps
        def ok(idx):
            p = p_max[i] * idx / steps
            return all(float(rate(h0, noise, bandwidth, p, math.dist(positions[i], positions[k]))) * tau >= bits
                       for k, bits in mine)
        if not ok(hi):
            return None
        while lo < hi:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid + 1
        found = p_max[i] * lo / steps
        powers.append(found)
    return powers


def cell_centers(cols, rows, w, h):
    return [((c + 0.5) * w, (r + 0.5) * h) for r in range(rows) for c in range(cols)]


def best_cell_assignment(centers, pair_coeffs, n, caps=None):
    """Minimum of sum coeff * d^2 over injective UAV -> cell maps; caps[(i, k)] bounds coeff * d^2."""
    best = math.inf
    for cells in itertools.permutations(range(len(centers)), n):
        total = 0.0
        ok = True
        for (i, k), c in pair_coeffs.items():
            (x1, y1), (x2, y2) = centers[cells[i]], centers[cells[k]]
            val = c * ((x1 - x2) ** 2 + (y1 - y2) ** 2)
            if caps is not None and val > caps[(i, k)]:
                ok = False
                break
            total += val
        if ok and total < best:
            best = total
    return best

"""Line-of-sight link model: path gain, lower-bound rate and reliability power.

Payload sizes are in bits throughout. Distances below the 1 m reference
distance are clamped to it so the gain never exceeds ``h0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelParams

REFERENCE_DISTANCE_M = 1.0
# exp() argument beyond which the threshold power is treated as unreachable
MAX_EXPONENT = 700.0


class ChannelError(ValueError):
    pass


class UnreachableReliability(ChannelError):
    """A payload cannot be delivered within tau at any finite power."""


@dataclass(frozen=True)
class LinkBudget:
    gain: float
    rate_bps: float
    distance_m: float


def _check_distance(d_m) -> None:
    if np.any(np.asarray(d_m) <= 0) or np.any(np.isnan(d_m)):
        raise ChannelError(f"distance must be positive, got {d_m!r}")


def channel_gain(params: ChannelParams, d_m):
    _check_distance(d_m)
    d = np.maximum(d_m, REFERENCE_DISTANCE_M)
    out = params.h0 / (d * d)
    return float(out) if np.ndim(out) == 0 else out


def data_rate(params: ChannelParams, p_tx_w, d_m):
    if np.any(np.asarray(p_tx_w) < 0):
        raise ChannelError("transmit power must be non-negative")
    snr = channel_gain(params, d_m) * p_tx_w / params.noise_power_w
    out = params.bandwidth_hz * np.log1p(snr) / math.log(2.0)
    return float(out) if np.ndim(out) == 0 else out


def link_budget(params: ChannelParams, p_tx_w: float, d_m: float) -> LinkBudget:
    return LinkBudget(float(channel_gain(params, d_m)), float(data_rate(params, p_tx_w, d_m)), float(d_m))


def reliability_coefficient(params: ChannelParams, k_bits):
    """(sigma^2 / h0) * (exp(K ln2 / (B tau)) - 1): threshold power per square metre."""
    k = np.asarray(k_bits, dtype=float)
    if np.any(k <= 0):
        raise ChannelError("payload size must be positive")
    exponent = k * math.log(2.0) / (params.bandwidth_hz * params.tau_s)
    if np.any(exponent > MAX_EXPONENT):
        worst = float(np.max(k))
        raise UnreachableReliability(
            f"{worst:g} bits cannot be delivered within tau={params.tau_s:g} s at B={params.bandwidth_hz:g} Hz"
        )
    coeff = params.noise_power_w / params.h0 * np.expm1(exponent)
    return float(coeff) if np.ndim(coeff) == 0 else coeff


def threshold_power(params: ChannelParams, k_bits, d_m):
    """Smallest power at which data_rate(P, d) * tau equals k_bits."""
    _check_distance(d_m)
    coeff = reliability_coefficient(params, k_bits)
    d = np.maximum(d_m, REFERENCE_DISTANCE_M)
    out = coeff * d * d
    return float(out) if np.ndim(out) == 0 else out


def pairwise_distances(positions) -> np.ndarray:
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])

"""Shared domain types: grid, fleet, channel constants, requests, scenario.

Everything is SI internally (W, bytes, bits for link payloads, s, m). dBm and
MHz only appear at the config boundary, see :mod:`uavinfer.config`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cnn import CnnModel


class ScenarioError(ValueError):
    """An invariant of the scenario is violated; message starts with the field path."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def w_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class GridSpec:
    """``cols x rows`` cells of equal size; cell 0 sits at the south-west corner."""

    cell_width_m: float
    cell_height_m: float
    cols: int
    rows: int
    cell_radius_m: float

    @property
    def num_cells(self) -> int:
        return self.cols * self.rows

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_width_m

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_height_m

    @property
    def min_separation_m(self) -> float:
        return 2.0 * self.cell_radius_m


@dataclass(frozen=True)
class UavProfile:
    mem_capacity_bytes: float
    mult_per_sec: float
    p_max_w: float
    name: str = ""

    def compute_budget(self, time_frame_s: float) -> float:
        """Multiplications available in one time frame."""
        return self.mult_per_sec * time_frame_s


@dataclass(frozen=True)
class UavState:
    id: int
    position: tuple[float, float]
    assigned_cell: int
    tx_power_w: float = 0.0


@dataclass(frozen=True)
class ChannelParams:
    h0: float
    noise_power_w: float
    bandwidth_hz: float
    tau_s: float


@dataclass(frozen=True)
class Request:
    id: int
    source_uav: int
    input_bytes: float
    model_id: str

    @property
    def input_bits(self) -> float:
        return 8.0 * self.input_bytes


@dataclass(frozen=True)
class Scenario:
    grid: GridSpec
    fleet: tuple[UavProfile, ...]
    channel: ChannelParams
    requests: tuple[Request, ...]
    model: CnnModel
    time_frame_s: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "fleet", tuple(self.fleet))
        object.__setattr__(self, "requests", tuple(self.requests))

    @property
    def num_uavs(self) -> int:
        return len(self.fleet)


# Raspberry Pi class devices; rates are in multiplications per second
PI_MEMORY_BYTES = 1e9
DEFAULT_P_MAX_W = 0.12
DEVICE_PROFILES = {
    "pi560": UavProfile(PI_MEMORY_BYTES, 560e6, DEFAULT_P_MAX_W, "pi560"),
    "pi512": UavProfile(PI_MEMORY_BYTES, 512e6, DEFAULT_P_MAX_W, "pi512"),
    "pi256": UavProfile(PI_MEMORY_BYTES, 256e6, DEFAULT_P_MAX_W, "pi256"),
}


def cell_center(grid: GridSpec, cell: int) -> tuple[float, float]:
    if not 0 <= cell < grid.num_cells:
        raise IndexError(f"cell {cell} outside grid of {grid.num_cells} cells")
    row, col = divmod(cell, grid.cols)
    return ((col + 0.5) * grid.cell_width_m, (row + 0.5) * grid.cell_height_m)


def cell_of(grid: GridSpec, x: float, y: float) -> int:
    """Cell containing a point; points on the outer boundary belong to the edge cells."""
    col = min(max(int(x // grid.cell_width_m), 0), grid.cols - 1)
    row = min(max(int(y // grid.cell_height_m), 0), grid.rows - 1)
    return row * grid.cols + col


def _positive(path: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
        raise ScenarioError(path, f"must be a positive finite number, got {value!r}")


def validate_grid(grid: GridSpec, path: str = "grid") -> None:
    if grid.cols < 1 or grid.rows < 1:
        raise ScenarioError(path, f"need at least one cell, got {grid.cols}x{grid.rows}")
    for name in ("cell_width_m", "cell_height_m", "cell_radius_m"):
        _positive(f"{path}.{name}", getattr(grid, name))
    half = min(grid.cell_width_m, grid.cell_height_m) / 2.0
    if grid.cell_radius_m > half:
        raise ScenarioError(f"{path}.cell_radius_m",
                            f"{grid.cell_radius_m} exceeds half the smallest cell side ({half})")


def validate_channel(channel: ChannelParams, path: str = "channel") -> None:
    for name in ("h0", "noise_power_w", "bandwidth_hz", "tau_s"):
        _positive(f"{path}.{name}", getattr(channel, name))
    if channel.h0 > 1:
        raise ScenarioError(f"{path}.h0", f"path gain must be <= 1, got {channel.h0}")


def validate_state(state: UavState, profile: UavProfile, grid: GridSpec, path: str = "state") -> None:
    if not 0 <= state.tx_power_w <= profile.p_max_w:
        raise ScenarioError(f"{path}.tx_power_w", f"{state.tx_power_w} outside [0, {profile.p_max_w}]")
    x, y = state.position
    if not (0 <= x <= grid.width_m and 0 <= y <= grid.height_m):
        raise ScenarioError(f"{path}.position", f"{state.position} outside the grid")
    if not 0 <= state.assigned_cell < grid.num_cells:
        raise ScenarioError(f"{path}.assigned_cell", f"{state.assigned_cell} is not a grid cell")


def validate_scenario(s: Scenario) -> Scenario:
    validate_grid(s.grid)
    if not s.fleet:
        raise ScenarioError("fleet", "empty fleet")
    for i, prof in enumerate(s.fleet):
        for name in ("mem_capacity_bytes", "mult_per_sec", "p_max_w"):
            _positive(f"fleet[{i}].{name}", getattr(prof, name))
    validate_channel(s.channel)
    _positive("time_frame_s", s.time_frame_s)
    for idx, req in enumerate(s.requests):
        path = f"requests[{idx}]"
        _positive(f"{path}.input_bytes", req.input_bytes)
        if not 0 <= req.source_uav < len(s.fleet):
            raise ScenarioError(f"{path}.source_uav", f"{req.source_uav} is not a fleet index")
        if req.model_id != s.model.id:
            raise ScenarioError(f"{path}.model_id", f"unknown model {req.model_id!r}")
    ids = [req.id for req in s.requests]
    if len(set(ids)) != len(ids):
        raise ScenarioError("requests", "duplicate request ids")
    return s

"""Scenario files and scenario transformations used by sweeps.

Scenario files are JSON objects with the sections ``grid``, ``channel``,
``fleet``, ``requests`` and ``model`` plus the scalars ``time_frame_s`` and
``seed``. Unknown keys anywhere are rejected.

Canonical form (what :func:`scenario_to_dict` emits) is all SI::

    grid      cell_width_m, cell_height_m, cols, rows, cell_radius_m
    channel   h0, noise_power_w, bandwidth_hz, tau_s
    fleet     list of {name, mem_capacity_bytes, mult_per_sec, p_max_w}
    requests  list of {id, source_uav, input_bytes, model_id}
    model     built-in id ("lenet5", "alexnet") or an inline descriptor

On input a few boundary units are also accepted, one per quantity:
``noise_power_dbm``, ``bandwidth_mhz``, ``p_max_mw``, and
``mult_rate`` + ``mult_rate_scale`` (default 1e6) instead of ``mult_per_sec``.
A fleet entry may name a built-in device via ``profile`` and repeat it with
``count``. ``requests`` may be ``{"count": N, "sources": "random" |
"round_robin", "input_bytes": optional}``; random sources are drawn from the
scenario seed and ``input_bytes`` defaults to the model's input tensor size.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .cnn import BUILTIN_MODELS, CnnModel, model_to_dict, resolve_model
from .model import (
    DEVICE_PROFILES,
    ChannelParams,
    GridSpec,
    Request,
    Scenario,
    ScenarioError,
    UavProfile,
    dbm_to_w,
    validate_scenario,
)

_TOP_KEYS = {"grid", "channel", "fleet", "requests", "model", "time_frame_s", "seed"}
_GRID_KEYS = {"cell_width_m", "cell_height_m", "cols", "rows", "cell_radius_m"}
_CHANNEL_KEYS = {"h0", "noise_power_w", "noise_power_dbm", "bandwidth_hz", "bandwidth_mhz", "tau_s"}
_FLEET_KEYS = {"name", "profile", "count", "mem_capacity_bytes", "mult_per_sec", "mult_rate",
               "mult_rate_scale", "p_max_w", "p_max_mw"}
_REQUEST_KEYS = {"id", "source_uav", "input_bytes", "model_id"}
_REQUEST_GEN_KEYS = {"count", "sources", "input_bytes"}


def _check_keys(path: str, data: Any, allowed: set[str]) -> None:
    if not isinstance(data, dict):
        raise ScenarioError(path, f"expected a table, got {type(data).__name__}")
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(path, f"unknown keys {sorted(unknown)}")


def _one_of(path: str, data: dict, options: dict[str, Any]) -> float:
    """Pick the single present key among unit variants and convert it to SI."""
    present = [k for k in options if k in data]
    if len(present) != 1:
        raise ScenarioError(path, f"expected exactly one of {sorted(options)}")
    key = present[0]
    return options[key](data[key])


def _grid(data: dict) -> GridSpec:
    _check_keys("grid", data, _GRID_KEYS)
    try:
        return GridSpec(float(data["cell_width_m"]), float(data["cell_height_m"]),
                        int(data["cols"]), int(data["rows"]), float(data["cell_radius_m"]))
    except KeyError as exc:
        raise ScenarioError("grid", f"missing key {exc.args[0]!r}") from None


def _channel(data: dict) -> ChannelParams:
    _check_keys("channel", data, _CHANNEL_KEYS)
    noise = _one_of("channel", data, {"noise_power_w": float, "noise_power_dbm": dbm_to_w})
    bandwidth = _one_of("channel", data, {"bandwidth_hz": float, "bandwidth_mhz": lambda v: v * 1e6})
    try:
        return ChannelParams(float(data["h0"]), noise, bandwidth, float(data["tau_s"]))
    except KeyError as exc:
        raise ScenarioError("channel", f"missing key {exc.args[0]!r}") from None


def _fleet(data: list) -> list[UavProfile]:
    if not isinstance(data, list):
        raise ScenarioError("fleet", "expected a list")
    fleet: list[UavProfile] = []
    for idx, rec in enumerate(data):
        path = f"fleet[{idx}]"
        _check_keys(path, rec, _FLEET_KEYS)
        base: dict[str, Any] = {}
        if "profile" in rec:
            if rec["profile"] not in DEVICE_PROFILES:
                raise ScenarioError(f"{path}.profile", f"unknown device {rec['profile']!r}")
            base = dataclasses.asdict(DEVICE_PROFILES[rec["profile"]])
        if "mem_capacity_bytes" in rec:
            base["mem_capacity_bytes"] = float(rec["mem_capacity_bytes"])
        if "mult_per_sec" in rec or "mult_rate" in rec:
            if "mult_per_sec" in rec and "mult_rate" in rec:
                raise ScenarioError(path, "give mult_per_sec or mult_rate, not both")
            if "mult_per_sec" in rec:
                base["mult_per_sec"] = float(rec["mult_per_sec"])
            else:
                base["mult_per_sec"] = float(rec["mult_rate"]) * float(rec.get("mult_rate_scale", 1e6))
        if "p_max_w" in rec or "p_max_mw" in rec:
            base["p_max_w"] = _one_of(path, rec, {"p_max_w": float, "p_max_mw": lambda v: v * 1e-3})
        if "name" in rec:
            base["name"] = rec["name"]
        try:
            profile = UavProfile(base["mem_capacity_bytes"], base["mult_per_sec"], base["p_max_w"],
                                 base.get("name", ""))
        except KeyError as exc:
            raise ScenarioError(path, f"missing key {exc.args[0]!r}") from None
        count = rec.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise ScenarioError(f"{path}.count", f"must be a positive integer, got {count!r}")
        fleet.extend([profile] * count)
    return fleet


def draw_requests(
    count: int,
    num_uavs: int,
    model: CnnModel,
    rng: np.random.Generator | None = None,
    *,
    sources: str = "random",
    input_bytes: float | None = None,
) -> tuple[Request, ...]:
    """``count`` requests for ``model``; sources uniform over the fleet or round-robin."""
    if input_bytes is None:
        input_bytes = model.input_bits / 8.0
    if sources == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        src = [int(s) for s in rng.integers(0, num_uavs, size=count)]
    elif sources == "round_robin":
        src = [r % num_uavs for r in range(count)]
    else:
        raise ScenarioError("requests.sources", f"unknown source pattern {sources!r}")
    return tuple(Request(r, src[r], float(input_bytes), model.id) for r in range(count))


def _requests(data: Any, num_uavs: int, model: CnnModel, seed: int) -> tuple[Request, ...]:
    if isinstance(data, dict):
        _check_keys("requests", data, _REQUEST_GEN_KEYS)
        rng = np.random.default_rng(seed)
        return draw_requests(int(data.get("count", 0)), num_uavs, model, rng,
                             sources=data.get("sources", "random"), input_bytes=data.get("input_bytes"))
    if not isinstance(data, list):
        raise ScenarioError("requests", "expected a list or a generator table")
    out = []
    for idx, rec in enumerate(data):
        path = f"requests[{idx}]"
        _check_keys(path, rec, _REQUEST_KEYS)
        out.append(Request(int(rec.get("id", idx)), int(rec["source_uav"]),
                           float(rec.get("input_bytes", model.input_bits / 8.0)),
                           rec.get("model_id", model.id)))
    return tuple(out)


def scenario_from_dict(data: dict) -> Scenario:
    _check_keys("scenario", data, _TOP_KEYS)
    for key in ("grid", "channel", "fleet", "model"):
        if key not in data:
            raise ScenarioError(key, "missing section")
    try:
        model = resolve_model(data["model"])
    except ValueError as exc:
        raise ScenarioError("model", str(exc)) from None
    seed = int(data.get("seed", 0))
    fleet = _fleet(data["fleet"])
    scenario = Scenario(
        grid=_grid(data["grid"]),
        fleet=tuple(fleet),
        channel=_channel(data["channel"]),
        requests=_requests(data.get("requests", []), len(fleet), model, seed),
        model=model,
        time_frame_s=float(data.get("time_frame_s", 1.0)),
        seed=seed,
    )
    return validate_scenario(scenario)


def scenario_to_dict(s: Scenario) -> dict:
    builtin = BUILTIN_MODELS.get(s.model.id)
    model: Any = s.model.id if builtin is not None and builtin() == s.model else model_to_dict(s.model)
    return {
        "grid": dataclasses.asdict(s.grid),
        "channel": dataclasses.asdict(s.channel),
        "fleet": [
            {"name": p.name, "mem_capacity_bytes": p.mem_capacity_bytes,
             "mult_per_sec": p.mult_per_sec, "p_max_w": p.p_max_w}
            for p in s.fleet
        ],
        "requests": [dataclasses.asdict(r) for r in s.requests],
        "model": model,
        "time_frame_s": s.time_frame_s,
        "seed": s.seed,
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def loads_scenario(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))


def load_scenario(path: str | Path) -> Scenario:
    return loads_scenario(Path(path).read_text())


def default_scenario() -> Scenario:
    """Scenario shipped with the package (480 m x 480 m area, LeNet-5)."""
    text = resources.files("uavinfer").joinpath("data/default_scenario.json").read_text()
    return loads_scenario(text)


# -- transformations used by sweeps ------------------------------------------

def _resample(s: Scenario, count: int, num_uavs: int, model: CnnModel, seed: int) -> tuple[Request, ...]:
    input_bytes = s.requests[0].input_bytes if s.requests and model is s.model else None
    return draw_requests(count, num_uavs, model, np.random.default_rng(seed), input_bytes=input_bytes)


def with_request_count(s: Scenario, count: int, seed: int | None = None) -> Scenario:
    seed = s.seed if seed is None else seed
    return dataclasses.replace(s, requests=_resample(s, count, s.num_uavs, s.model, seed), seed=seed)


def with_uav_count(s: Scenario, count: int) -> Scenario:
    """Resize the fleet by cycling the existing profiles; request sources are redrawn."""
    fleet = tuple(s.fleet[i % len(s.fleet)] for i in range(count))
    grown = dataclasses.replace(s, fleet=fleet)
    return dataclasses.replace(grown, requests=_resample(s, len(s.requests), count, s.model, s.seed))


def with_p_max(s: Scenario, p_max_w: float) -> Scenario:
    return dataclasses.replace(s, fleet=tuple(dataclasses.replace(p, p_max_w=p_max_w) for p in s.fleet))


def with_bandwidth(s: Scenario, bandwidth_hz: float) -> Scenario:
    return dataclasses.replace(s, channel=dataclasses.replace(s.channel, bandwidth_hz=bandwidth_hz))


def with_device_profile(s: Scenario, name: str) -> Scenario:
    """Homogeneous fleet of one built-in device, keeping the current power cap."""
    if name not in DEVICE_PROFILES:
        raise ScenarioError("device_profile", f"unknown device {name!r}")
    fleet = tuple(dataclasses.replace(DEVICE_PROFILES[name], p_max_w=p.p_max_w) for p in s.fleet)
    return dataclasses.replace(s, fleet=fleet)


def with_model(s: Scenario, model_ref: str | dict) -> Scenario:
    model = resolve_model(model_ref)
    requests = tuple(dataclasses.replace(r, model_id=model.id, input_bytes=model.input_bits / 8.0)
                     for r in s.requests)
    return dataclasses.replace(s, model=model, requests=requests)


def with_time_frame(s: Scenario, time_frame_s: float) -> Scenario:
    return dataclasses.replace(s, time_frame_s=float(time_frame_s))

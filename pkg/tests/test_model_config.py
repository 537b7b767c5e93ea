import dataclasses
import json

import pytest
from hypothesis import given, strategies as st

from uavinfer import config
from uavinfer.model import (
    DEVICE_PROFILES,
    GridSpec,
    ScenarioError,
    UavState,
    cell_center,
    cell_of,
    dbm_to_w,
    validate_scenario,
    validate_state,
    w_to_dbm,
)

DEFAULT_GRID = GridSpec(40.0, 40.0, 12, 12, 20.0)


def test_cell_centers():
    assert cell_center(DEFAULT_GRID, 0) == (20.0, 20.0)
    assert cell_center(DEFAULT_GRID, 13) == (60.0, 60.0)
    assert cell_center(DEFAULT_GRID, 143) == (460.0, 460.0)
    with pytest.raises(IndexError):
        cell_center(DEFAULT_GRID, 144)


def test_cell_center_matches_enumeration():
    expected = [((c + 0.5) * 40, (r + 0.5) * 40) for r in range(12) for c in range(12)]
    assert [cell_center(DEFAULT_GRID, i) for i in range(144)] == expected
    assert all(cell_of(DEFAULT_GRID, *cell_center(DEFAULT_GRID, i)) == i for i in range(144))


def test_noise_conversion():
    assert dbm_to_w(-170.0) == 1e-20
    assert w_to_dbm(0.12) == pytest.approx(20.79181246, rel=1e-9)


@given(st.floats(-200, 60))
def test_dbm_round_trip(dbm):
    assert w_to_dbm(dbm_to_w(dbm)) == pytest.approx(dbm, rel=1e-12, abs=1e-12)


def test_default_scenario_has_field_constants():
    s = config.default_scenario()
    assert (s.grid.width_m, s.grid.height_m, s.grid.num_cells) == (480.0, 480.0, 144)
    assert s.grid.cell_radius_m == 20.0
    assert s.channel.noise_power_w == 1e-20
    assert s.channel.h0 == 1e-5 and s.channel.tau_s == 1e-4 and s.channel.bandwidth_hz == 1e7
    assert {p.p_max_w for p in s.fleet} == {0.12}
    assert sorted({p.mult_per_sec for p in s.fleet}) == [256e6, 512e6, 560e6]
    assert validate_scenario(s) is s


def test_empty_fleet_rejected():
    s = dataclasses.replace(config.default_scenario(), fleet=(), requests=())
    with pytest.raises(ScenarioError, match="empty fleet"):
        validate_scenario(s)


def test_radius_larger_than_half_cell_rejected():
    s = config.default_scenario()
    bad = dataclasses.replace(s, grid=dataclasses.replace(s.grid, cell_radius_m=30.0))
    with pytest.raises(ScenarioError, match="cell_radius_m"):
        validate_scenario(bad)


def test_request_with_unknown_source_rejected():
    s = config.default_scenario()
    bad = dataclasses.replace(s, requests=(dataclasses.replace(s.requests[0], source_uav=99),))
    with pytest.raises(ScenarioError, match=r"requests\[0\].source_uav"):
        validate_scenario(bad)


def test_state_validation():
    prof = DEVICE_PROFILES["pi560"]
    validate_state(UavState(0, (20.0, 20.0), 0, 0.1), prof, DEFAULT_GRID)
    with pytest.raises(ScenarioError):
        validate_state(UavState(0, (20.0, 20.0), 0, 0.2), prof, DEFAULT_GRID)
    with pytest.raises(ScenarioError):
        validate_state(UavState(0, (500.0, 20.0), 0, 0.0), prof, DEFAULT_GRID)


def test_serialisation_round_trip_is_exact():
    s = config.default_scenario()
    text = config.dumps_scenario(s)
    again = config.loads_scenario(text)
    assert again == s
    assert config.dumps_scenario(again) == text


def _raw():
    return json.loads(config.dumps_scenario(config.default_scenario()))


def test_unknown_keys_fail_closed():
    raw = _raw()
    raw["channel"]["fading"] = True
    with pytest.raises(ScenarioError, match="channel"):
        config.scenario_from_dict(raw)
    raw = _raw()
    raw["extra"] = 1
    with pytest.raises(ScenarioError):
        config.scenario_from_dict(raw)


def test_boundary_units():
    raw = _raw()
    raw["channel"] = {"h0": 1e-5, "noise_power_dbm": -170.0, "bandwidth_mhz": 20, "tau_s": 1e-4}
    raw["fleet"] = [{"mem_capacity_bytes": 1e9, "mult_rate": 560, "p_max_mw": 120}]
    raw["requests"] = [{"source_uav": 0}]
    s = config.scenario_from_dict(raw)
    assert s.channel.noise_power_w == 1e-20 and s.channel.bandwidth_hz == 2e7
    assert s.fleet[0].mult_per_sec == 560e6 and s.fleet[0].p_max_w == pytest.approx(0.12)
    assert s.requests[0].input_bits == s.model.input_bits


def test_conflicting_units_rejected():
    raw = _raw()
    raw["channel"]["bandwidth_mhz"] = 10
    with pytest.raises(ScenarioError):
        config.scenario_from_dict(raw)


def test_request_generator_is_seeded():
    raw = _raw()
    raw["requests"] = {"count": 12, "sources": "random"}
    a = config.scenario_from_dict(raw)
    b = config.scenario_from_dict(raw)
    assert a.requests == b.requests and len(a.requests) == 12
    raw["requests"] = {"count": 7, "sources": "round_robin"}
    assert [r.source_uav for r in config.scenario_from_dict(raw).requests] == [0, 1, 2, 3, 4, 5, 0]


def test_transforms():
    s = config.default_scenario()
    assert {p.p_max_w for p in config.with_p_max(s, 0.06).fleet} == {0.06}
    assert config.with_bandwidth(s, 2e7).channel.bandwidth_hz == 2e7
    grown = config.with_uav_count(s, 8)
    assert grown.num_uavs == 8 and all(r.source_uav < 8 for r in grown.requests)
    assert {p.name for p in config.with_device_profile(s, "pi256").fleet} == {"pi256"}
    alex = config.with_model(s, "alexnet")
    assert alex.model.id == "alexnet" and alex.requests[0].input_bits == alex.model.input_bits
    assert len(config.with_request_count(s, 3, seed=5).requests) == 3
    assert config.with_time_frame(s, 0.5).time_frame_s == 0.5

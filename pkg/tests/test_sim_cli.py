import json

import pytest

from uavinfer import cli, config, sim
from uavinfer.baselines import Strategy

S = config.default_scenario()


def test_single_frame_breakdown():
    (row,) = sim.run_frames(S, Strategy.named("llhr"), 1)
    assert row.feasible
    assert row.latency_s == sum(row.breakdown)
    assert row.latency_s == pytest.approx(sum(row.per_request_s), rel=1e-12)
    assert row.total_power_w <= sum(p.p_max_w for p in S.fleet)
    assert row.min_power_w == row.total_power_w / S.num_uavs


def test_random_frames_are_reproducible():
    a = sim.run_frames(S, Strategy.named("random", seed=4), 10)
    b = sim.run_frames(S, Strategy.named("random", seed=4), 10)
    assert [r.frame for r in a] == list(range(10))
    assert a == b
    assert len({r.latency_s for r in a}) > 1


def test_infeasible_frames_become_rows():
    tiny = config.with_time_frame(S, 1e-6)
    rows = sim.run_frames(tiny, Strategy.named("llhr"), 2)
    assert [r.feasible for r in rows] == [False, False]
    assert rows[0].latency_s is None and "compute" in rows[0].error


def test_csv_round_trip():
    spec = sim.SweepSpec("p_max", [0.06, 0.12], trials=2, strategies=("llhr", "random"))
    rows = sim.run_sweep(spec, S)
    text = sim.rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(sim.CSV_COLUMNS)
    parsed = sim.parse_csv(text)
    assert len(parsed) == 8
    assert [p["latency_s"] for p in parsed] == [r.result.latency_s for r in rows]
    cells = sim.summarize(rows)
    assert len(cells) == 4 and all(c.trials == 2 for c in cells)
    assert sim.summary_to_csv(cells).count("\n") == 5


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        sim.SweepSpec("altitude", [1])
    with pytest.raises(ValueError):
        sim.SweepSpec("p_max", [])
    with pytest.raises(ValueError):
        sim.SweepSpec("p_max", [0.1], trials=0)
    with pytest.raises(ValueError):
        sim.SweepSpec.from_dict({"variable": "p_max", "values": [0.1], "colour": 1})


def test_trial_scenarios_share_sources_across_values():
    spec = sim.SweepSpec("p_max", [0.06, 0.12], trials=2)
    a = sim.trial_scenario(S, spec, 0.06, 1)
    b = sim.trial_scenario(S, spec, 0.12, 1)
    c = sim.trial_scenario(S, spec, 0.12, 0)
    assert a.requests == b.requests != c.requests


def test_cli_run_csv_is_byte_identical(tmp_path):
    outs = []
    for n in range(2):
        out = tmp_path / f"r{n}.csv"
        assert cli.main(["run", "--strategy", "random", "--frames", "3", "--seed", "5", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_run_json(tmp_path):
    out = tmp_path / "plan.json"
    assert cli.main(["run", "--out", str(out)]) == 0
    (frame,) = json.loads(out.read_text())
    assert len(frame["assign"]) == len(S.requests) and len(frame["positions"]) == S.num_uavs


def test_cli_sweep_writes_summary(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"variable": "bandwidth", "values": [1e7, 2e7], "trials": 2}))
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--spec", str(spec), "--out", str(out)]) == 0
    assert len(sim.parse_csv(out.read_text())) == 4
    assert (tmp_path / "sweep_summary.csv").exists()


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {}}))
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert "error" in capsys.readouterr().err
    tight = tmp_path / "tight.json"
    tight.write_text(config.dumps_scenario(config.with_time_frame(S, 1e-6)))
    assert cli.main(["run", "--config", str(tight), "--out", str(tmp_path / "x.csv")]) == 2


def test_cli_profile(capsys):
    assert cli.main(["profile", "--model", "alexnet"]) == 0
    assert "fc8" in capsys.readouterr().out


def test_shipped_sweep_specs_parse():
    from importlib import resources
    folder = resources.files("uavinfer").joinpath("data/sweeps")
    names = [p.name for p in folder.iterdir() if p.name.endswith(".json")]
    assert len(names) >= 6
    for name in names:
        sim.SweepSpec.from_dict(json.loads(folder.joinpath(name).read_text()))

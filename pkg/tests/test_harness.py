import json
import math

import numpy as np
import pytest

from dracbf.harness import (FilterChoice, IoFailure, RunMetrics, ablate, export, make_filter, read_csv,
                            read_jsonl, run_batch, run_episode, sensitivity_sweep, summarize, sweep_table)
from dracbf.sim.scenario import ConfigError, load_scenario, scenario_from_dict

HEAD_ON = load_scenario("scenarios/head_on.yaml")


def _short(**extra):
    data = {"obstacles": [], "uav": {"goal": [4, 0, 0]}, "timeout": 10.0}
    data.update(extra)
    return scenario_from_dict(data)


def test_no_obstacles_reaches_goal():
    m = run_episode(_short())
    assert m.success and m.reason == "goal"
    assert m.d_s == math.inf
    assert math.isnan(m.trigger_time) and m.infeasibility_events == 0


def test_head_on_episode_keeps_separation():
    m = run_episode(HEAD_ON, seed=0)
    assert m.success and m.reason == "clear"
    assert m.d_s >= 0.3
    assert m.trigger_time > 0 and m.v_cl_at_trigger > 0
    assert m.t_r >= m.t_cm > 0
    assert 0 < m.t_cp < 50


def test_episode_is_deterministic_apart_from_timing():
    a, b = run_episode(HEAD_ON, seed=4), run_episode(HEAD_ON, seed=4)
    for name in ("success", "reason", "d_s", "trigger_time", "v_cl_at_trigger", "n_steps", "t_a", "t_d"):
        x, y = getattr(a, name), getattr(b, name)
        assert x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y))


def test_make_filter_choices():
    assert make_filter(HEAD_ON, "no-cvar").trigger == "gaussian"
    assert type(make_filter(HEAD_ON, FilterChoice.CBF_QP)).__name__ == "CBFQPFilter"
    with pytest.raises(ConfigError):
        make_filter(scenario_from_dict({"obstacles": [], "filter": {"alpha_total": 2.0}}), "dr-acbf")
    with pytest.raises(ValueError):
        FilterChoice("other")


def test_batch_aggregation():
    s = run_batch(HEAD_ON, 3, seed_base=10)
    assert [r.seed for r in s.runs] == [10, 11, 12]
    assert s.n_runs == 3 and s.success_rate == 100.0
    assert s.means["d_s"] == pytest.approx(np.mean([r.d_s for r in s.runs]))
    assert s.fingerprint == HEAD_ON.fingerprint() and s.filter == "dr-acbf"
    with pytest.raises(ValueError):
        run_batch(HEAD_ON, 0)


def test_summarize_skips_non_finite():
    runs = [RunMetrics(0, True, "goal", d_s=1.0), RunMetrics(1, False, "collision", d_s=math.inf)]
    s = summarize(runs, "abc", 0, "cbf-qp")
    assert s.success_rate == 50.0 and s.means["d_s"] == 1.0 and math.isnan(s.means["t_r"])
    assert s.to_dict()["means"]["t_r"] is None


def test_sweep_rows_and_table():
    base = _short()
    rows = sensitivity_sweep(base, "H_max", [0.3, 0.5], 2)
    assert [v for v, _ in rows] == [0.3, 0.5] and all(s.n_runs == 2 for _, s in rows)
    assert rows[0][1].fingerprint != rows[1][1].fingerprint
    table = sweep_table(base, rows, "H_max")
    assert [r["H_max"] for r in table] == [0.3, 0.5]
    assert {"s", "v_cl", "t_r", "t_cm", "t_cp", "d_s"} <= set(table[0])
    with pytest.raises(ValueError):
        sensitivity_sweep(base, "H_max", [], 1)


def test_ablation_reports_gap():
    res = ablate(_short(), 2)
    assert res["gap"] == res["on"].success_rate - res["off"].success_rate
    assert res["off"].filter == "no-cvar"


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_export_round_trip(tmp_path, fmt):
    s = run_batch(HEAD_ON, 2)
    paths = export(s, tmp_path, fmt)
    assert [p.name for p in paths] == [f"episodes.{fmt}", "episodes_summary.json"]
    back = (read_csv if fmt == "csv" else read_jsonl)(paths[0])
    for r, q in zip(s.runs, back):
        assert r.seed == q.seed and r.success == q.success and r.d_s == q.d_s
    summary = json.loads(paths[1].read_text())
    assert summary["fingerprint"] == HEAD_ON.fingerprint() and summary["seed_base"] == 0


def test_export_without_timing_is_reproducible(tmp_path):
    a = export(run_batch(HEAD_ON, 2), tmp_path / "a", include_timing=False)
    b = export(run_batch(HEAD_ON, 2), tmp_path / "b", include_timing=False)
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    assert "t_cp" not in a[0].read_text().splitlines()[0]


def test_export_errors(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure):
        export([RunMetrics(0, True, "goal")], blocker / "sub")
    with pytest.raises(ValueError):
        export([RunMetrics(0, True, "goal")], tmp_path, fmt="xml")
    with pytest.raises(ValueError):
        export([], tmp_path)

import csv
import io
import json
import math
import statistics

import numpy as np
import pytest

from felab.harness import (
    ConfigError,
    RunConfig,
    aggregate,
    emit_report,
    run_experiment,
    validate_summary,
)


def test_aggregate_constant():
    mean, (lo, hi), curve = aggregate(np.full((5, 7), 100.0))
    assert mean == 100.0 and lo == hi == 100.0
    np.testing.assert_array_equal(curve, 100.0)


def test_aggregate_alternating():
    m = np.array([[0.0] * 4, [100.0] * 4] * 3)
    assert aggregate(m)[0] == 50.0


def test_aggregate_ci_fixture():
    trial_means = [92.0, 97.5, 100.0, 88.0, 95.0, 99.0, 91.5, 100.0, 94.0, 96.0]
    m = np.array(trial_means)[:, None].repeat(2, axis=1)
    mean, (lo, hi), _ = aggregate(m)
    half = 1.96 * statistics.stdev(trial_means) / math.sqrt(10)
    assert mean == pytest.approx(statistics.fmean(trial_means))
    assert lo == pytest.approx(mean - half) and hi == pytest.approx(mean + half)


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate(np.zeros((0, 0)))


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(experiment="table3")
    with pytest.raises(ConfigError):
        RunConfig(trials=0)
    with pytest.raises(ConfigError):
        RunConfig(agents=["sarsa"])
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"experiment": "table2"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"schema": "felab.run/1", "colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig(settings={"gamma": 3})


def test_config_defaults():
    assert (RunConfig().trials, RunConfig().episodes) == (200, 500)
    t2 = RunConfig(experiment="table2")
    assert (t2.trials, t2.episodes, t2.agents) == (100, 100, ["q-eps", "bayes-rl", "ai"])
    assert RunConfig(experiment="learn-likelihood").trials == 15
    cfg = RunConfig(experiment="table1-nonstationary", trials=3)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.switches == (21, 121, 141, 251, 451)


def small(experiment="table1-nonstationary", **kw):
    kw.setdefault("trials", 3)
    kw.setdefault("episodes", 25)
    kw.setdefault("jobs", 1)
    return RunConfig(experiment=experiment, **kw)


@pytest.fixture(scope="module")
def report():
    return run_experiment(small())


def test_report_shape(report, tmp_path):
    files = emit_report(report, tmp_path)
    names = {p.name for p in files}
    assert {"summary.json", "table.csv", "curves.csv", "curves.svg"} <= names
    doc = validate_summary(json.loads((tmp_path / "summary.json").read_text()))
    assert len(doc["agents"]) == 5
    rows = list(csv.DictReader(io.StringIO((tmp_path / "curves.csv").read_text())))
    assert len(rows) == 5 * 25
    assert (tmp_path / "curves.svg").read_text().count("stroke-dasharray") == 1  # switch at 21
    for s in report.summaries:
        assert s.ci_low <= s.mean <= s.ci_high
        assert len(s.curve) == 25


def test_validator_rejects_bad_reports(report):
    doc = report.to_dict()
    doc["agents"][0]["curve"] = doc["agents"][0]["curve"][:3]
    with pytest.raises(ConfigError):
        validate_summary(doc)
    with pytest.raises(ConfigError):
        validate_summary({"schema": "nope"})


def test_byte_identical_reruns(tmp_path):
    a = emit_report(run_experiment(small(jobs=1)), tmp_path / "a")
    b = emit_report(run_experiment(small(jobs=2)), tmp_path / "b")
    for pa, pb in zip(sorted(a), sorted(b)):
        assert pa.name == pb.name
        if pa.name == "summary.json":
            da, db = json.loads(pa.read_text()), json.loads(pb.read_text())
            assert (da["config"].pop("jobs"), db["config"].pop("jobs")) == (1, 2)
            assert da == db
        else:
            assert pa.read_bytes() == pb.read_bytes()


def test_seed_changes_results():
    a = run_experiment(small(agents=["q-eps"], seed=1))
    b = run_experiment(small(agents=["q-eps"], seed=2))
    assert a.summaries[0].curve != b.summaries[0].curve


def test_roster_order_does_not_change_streams():
    a = run_experiment(small(agents=["q-eps", "ai"]))
    b = run_experiment(small(agents=["ai", "q-eps"]))
    assert a.summary("ai").curve == b.summary("ai").curve


def test_table2_rows(tmp_path):
    rep = run_experiment(small("table2", trials=2, episodes=5, rows=[[0, -100, 0], [100, -100, 0]]))
    assert len(rep.summaries) == 6
    s = rep.summary("q-eps", [0, -100, 0])
    assert s.mean == 0.0 and s.moves == 15.0
    emit_report(rep, tmp_path)
    assert "0/-100/0" in (tmp_path / "table.csv").read_text()


def test_learning_counts_and_traces(tmp_path):
    rep = run_experiment(small("learn-both", trials=2, episodes=3, trace=True))
    files = emit_report(rep, tmp_path)
    counts = [p for p in files if p.parent.name == "counts"]
    assert len(counts) == 2 * 3 * 2
    assert (tmp_path / "trace_learn-both.csv").exists()
    assert len(rep.extra["paths"]["learn-both"]) == 2

"""Full-scale acceptance runs.

Each criterion runs at its stated size and tolerance and reports a single
PASS/FAIL line (collected in the terminal summary).  The experiment runs
are shared between criteria through module fixtures; the whole file takes
roughly 5 minutes on one core.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from felab.harness import RunConfig, run_experiment

pytestmark = pytest.mark.slow

HERE = Path(__file__).parent


def report_line(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def timed(cfg):
    t0 = time.perf_counter()
    rep = run_experiment(cfg)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def stationary():
    return timed(RunConfig(experiment="table1-stationary"))


@pytest.fixture(scope="module")
def nonstationary():
    return timed(RunConfig(experiment="table1-nonstationary"))[0]


@pytest.fixture(scope="module")
def table2():
    return timed(RunConfig(experiment="table2"))[0]


def band_checks(rep, bands):
    failures, parts = [], []
    for agent, (lo, hi) in bands.items():
        m = rep.summary(agent).mean
        parts.append(f"{agent}={m:.2f}")
        if not lo <= m <= hi:
            failures.append(f"{agent} {m:.2f} outside [{lo}, {hi}]")
    return failures, parts


def test_table1_stationary(stationary):
    rep, seconds = stationary
    failures, parts = band_checks(rep, {
        "ai": (99, 100), "bayes-rl": (99, 100), "q-eps": (96, 99), "q-decay": (75, 85), "ai-null": (47, 53),
    })
    if seconds > 300:
        failures.append(f"wall clock {seconds:.0f} s > 300 s")
    ok = report_line(1, "Table 1 stationary", not failures, ", ".join(parts) + f", {seconds:.0f} s")
    assert ok, failures


def test_table1_nonstationary(nonstationary):
    rep = nonstationary
    failures, parts = band_checks(rep, {
        "ai": (97, 100), "q-eps": (55, 75), "q-decay": (55, 75), "bayes-rl": (55, 75), "ai-null": (47, 53),
    })
    ok = report_line(2, "Table 1 non-stationary", not failures, ", ".join(parts))
    assert ok, failures


def test_recovery_after_switches(nonstationary):
    rep = nonstationary
    ai = np.array(rep.summary("ai").curve)
    recovered = [e for e in rep.switches if max(ai[e - 1], ai[e]) >= 90]
    first = rep.switches[0]
    slow = {a: np.array(rep.summary(a).curve)[first - 1 : first + 9] for a in ("q-eps", "bayes-rl")}
    ai_ok = len(recovered) >= 4
    slow_ok = {a: bool(np.all(c < 50)) for a, c in slow.items()}
    ok = ai_ok and all(slow_ok.values())
    detail = (f"AI recovered at {len(recovered)}/5 switches; below 50 for 10 episodes after episode {first}: "
              + ", ".join(f"{a}={v}" for a, v in slow_ok.items()))
    assert report_line(3, "recovery", ok, detail), detail


TARGET_TABLE2 = {
    (0, 0, 0): {"q-eps": (0.00, 15.00), "bayes-rl": (39.94, 9.17), "ai": (44.00, 8.67)},
    (0, -100, 0): {"q-eps": (0.00, 15.00), "bayes-rl": (0.00, 15.00), "ai": (0.00, 15.00)},
    (100, -100, 0): {"q-eps": (95.56, 3.53), "bayes-rl": (99.77, 3.02), "ai": (99.52, 3.03)},
    (100, 0, -10): {"q-eps": (96.00, 3.48), "bayes-rl": (99.89, 3.00), "ai": (99.47, 3.00)},
    (100, -100, -10): {"q-eps": (96.47, 3.42), "bayes-rl": (99.79, 3.01), "ai": (99.58, 3.00)},
    (100, 0, 0): {"q-eps": (95.32, 3.58), "bayes-rl": (99.74, 3.00), "ai": (99.50, 3.07)},
}


def test_table2(table2):
    failures = []
    for row, agents in TARGET_TABLE2.items():
        for agent, (score, moves) in agents.items():
            s = table2.summary(agent, list(row))
            if abs(s.mean - score) > 3 or abs(s.moves - moves) > 0.5:
                failures.append(f"{row} {agent}: {s.mean:.2f} ({s.moves:.2f}) vs {score} ({moves})")
            if row == (0, -100, 0) and (s.mean != 0 or s.moves != 15):
                failures.append(f"{row} {agent}: expected exactly 0 (15.00)")
            if row == (0, 0, 0):
                lo, hi = (0, 0) if agent == "q-eps" else (35, 50)
                if not lo <= s.mean <= hi:
                    failures.append(f"{row} {agent}: {s.mean:.2f} outside [{lo}, {hi}]")
    ok = report_line(4, "Table 2", not failures, "; ".join(failures) or "all 18 cells within tolerance")
    assert ok, failures


def first_absorbing_outcome(path):
    return path[-1]


def test_preference_learning():
    details, failures = [], []

    lik = run_experiment(RunConfig(experiment="learn-likelihood", jobs=1))
    firsts = [runs[0] for runs in lik.extra["paths"]["learn-likelihood"]]
    repeats = [p for p in firsts if len(set(p)) != len(p)]
    details.append(f"likelihood-only: {len(firsts) - len(repeats)}/{len(firsts)} first episodes without revisits")
    if repeats:
        failures.append(f"revisits in {repeats}")

    prefs = run_experiment(RunConfig(experiment="learn-preferences", jobs=1))
    ok_runs = 0
    for paths, counts in zip(prefs.extra["paths"]["learn-preferences"], prefs.extra["_counts"]["learn-preferences"]):
        goal, hole = prefs.goal_cells["initial_goal"], prefs.goal_cells["initial_hole"]
        first = next(p[-1] for p in paths if p[-1] in (goal, hole))
        captured = 0 if first == goal else 1
        c = counts[-1]["c"]
        ok_runs += int(np.argmax(c[3]) == captured)
    details.append(f"preferences-only: {ok_runs}/{len(prefs.extra['paths']['learn-preferences'])} prefer first capture")
    if ok_runs != len(prefs.extra["paths"]["learn-preferences"]):
        failures.append("a preferences-only run does not prefer its first-captured outcome")

    both = run_experiment(RunConfig(experiment="learn-both", jobs=1))
    direct_runs = 0
    for paths in both.extra["paths"]["learn-both"]:
        late = paths[5:]
        ends = {p[-1] for p in late}
        direct = len(ends) == 1 and all(len(p) == 4 and len(set(p)) == 4 for p in late)
        direct_runs += int(direct)
    n = len(both.extra["paths"]["learn-both"])
    details.append(f"learn-both: {direct_runs}/{n} direct from episode 6")
    if direct_runs != n:
        failures.append("a learn-both run is not direct from episode 6")

    assert report_line(5, "preference learning", not failures, "; ".join(details)), failures


PROPERTY_FILES = ["test_inference.py", "test_learning.py", "test_baselines.py", "test_harness.py"]


def test_property_suites():
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
         *[str(HERE / f) for f in PROPERTY_FILES]],
        capture_output=True, text=True, cwd=HERE.parent,
    )
    seconds = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and seconds < 30
    assert report_line(6, "property suites", ok, f"{tail} ({seconds:.1f} s)"), proc.stdout[-2000:]

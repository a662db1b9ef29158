"""Experiment runner: trials x episodes for every agent, aggregated into reports."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .agent import ActiveInferenceAgent, AgentConfig
from .baselines import BayesianRLAgent, QLearningAgent, linear_decay
from .env import CONTEXT_CELLS, NONSTATIONARY_SWITCHES, FrozenLake, LakeConfig, episode_score
from .learning import LearningConfig
from .model import FrozenLakeModelConfig, build_frozenlake_model, preferences_from_rewards

SCHEMA = "felab.run/1"
REPORT_SCHEMA = "felab.report/1"

# stable indices keep RNG streams independent of roster order
AGENT_IDS = ("q-eps", "q-decay", "bayes-rl", "ai", "ai-null")
AGENT_LABELS = {
    "q-eps": "Q-learning (eps=0.1)",
    "q-decay": "Q-learning (eps decay)",
    "bayes-rl": "Bayesian RL",
    "ai": "Active Inference",
    "ai-null": "Active Inference (null)",
    "learn-likelihood": "AI, likelihood learning",
    "learn-preferences": "AI, preference learning",
    "learn-both": "AI, likelihood and preference learning",
}
EXPERIMENTS = (
    "table1-stationary", "table1-nonstationary", "table2",
    "learn-likelihood", "learn-preferences", "learn-both",
)
LEARNING_EXPERIMENTS = EXPERIMENTS[3:]
TABLE2_ROWS = ((0, 0, 0), (0, -100, 0), (100, -100, 0), (100, 0, -10), (100, -100, -10), (100, 0, 0))

DEFAULT_SETTINGS = {
    # context volatility carried between episodes, per experiment family
    "volatility_table1": 0.02,
    "volatility_table2": 3e-5,
    "volatility_learning": 0.0,
    "action_precision": 512.0,
    "learning_action_mode": "argmax",
    "score_preferences": [4.0, -4.0, 0.0],
    "q_alpha": 0.5,
    "q_discount": 0.99,
    "q_epsilon": 0.1,
    "bayes_k": 1,
    "bayes_discount": 0.9,
    "bayes_random_ties": True,
    "eta": 1.0,
    "a_init": 5.0,
    "c_init": 1.0,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "table1-stationary"
    agents: list = field(default_factory=lambda: list(AGENT_IDS))
    trials: int | None = None
    episodes: int | None = None
    seed: int = 0
    out: str = "results"
    jobs: int | None = None
    initial_context: int = 2
    rows: list = field(default_factory=lambda: [list(r) for r in TABLE2_ROWS])
    settings: dict = field(default_factory=dict)
    trace: bool = False
    dump_counts: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.experiment in LEARNING_EXPERIMENTS:
            if list(self.agents) == list(AGENT_IDS):
                self.agents = [self.experiment]
            default_trials = {"learn-likelihood": 15}.get(self.experiment, 10)
            default_episodes = 10
        elif self.experiment == "table2":
            if list(self.agents) == list(AGENT_IDS):
                self.agents = ["q-eps", "bayes-rl", "ai"]
            default_trials, default_episodes = 100, 100
        else:
            default_trials, default_episodes = 200, 500
        self.trials = default_trials if self.trials is None else int(self.trials)
        self.episodes = default_episodes if self.episodes is None else int(self.episodes)
        if self.trials < 1 or self.episodes < 1:
            raise ConfigError("trials and episodes must be at least 1")
        valid = set(AGENT_IDS) | set(LEARNING_EXPERIMENTS)
        for a in self.agents:
            if a not in valid:
                raise ConfigError(f"unknown agent {a!r}")
        unknown = set(self.settings) - set(DEFAULT_SETTINGS)
        if unknown:
            raise ConfigError(f"unknown settings {sorted(unknown)}")
        self.settings = {**DEFAULT_SETTINGS, **self.settings}
        if self.initial_context not in CONTEXT_CELLS:
            raise ConfigError("initial_context must be 1 or 2")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        schema = d.pop("schema", None)
        if schema != SCHEMA:
            raise ConfigError(f"config schema must be {SCHEMA!r}, got {schema!r}")
        names = set(cls.__dataclass_fields__)
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        return {"schema": SCHEMA, **asdict(self)}

    @property
    def switches(self):
        return NONSTATIONARY_SWITCHES if self.experiment == "table1-nonstationary" else ()


# --------------------------------------------------------------------------
# agents
# --------------------------------------------------------------------------


def trial_rng(seed, agent_id, trial, row=0):
    key = AGENT_IDS.index(agent_id) if agent_id in AGENT_IDS else 10 + LEARNING_EXPERIMENTS.index(agent_id)
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, int(row), int(trial)]))


def _ai_agent(model_cfg, settings, rng, learning=None, mode="sample"):
    cfg = AgentConfig(action_precision=settings["action_precision"], action_mode=mode, random_ties=True,
                      learning=learning or LearningConfig(eta=settings["eta"]))
    return ActiveInferenceAgent(build_frozenlake_model(model_cfg), cfg, rng)


def make_agent(agent_id, experiment, settings, rng, rewards=(100.0, 0.0, 0.0), episodes=500):
    s = settings
    if agent_id in ("q-eps", "q-decay"):
        eps = s["q_epsilon"] if agent_id == "q-eps" else linear_decay(episodes)
        return QLearningAgent(9, s["q_alpha"], s["q_discount"], eps, rng)
    if agent_id == "bayes-rl":
        return BayesianRLAgent(rewards, k=s["bayes_k"], discount=s["bayes_discount"],
                               random_ties=s["bayes_random_ties"], rng=rng)
    if agent_id in ("ai", "ai-null"):
        if experiment == "table2":
            c = preferences_from_rewards({"G": rewards[0], "H": rewards[1], "F": rewards[2]})
            prefs = (c["G"], c["H"], c["F"])
            h = s["volatility_table2"]
        else:
            prefs = tuple(s["score_preferences"])
            h = s["volatility_table1"]
        if agent_id == "ai-null":
            prefs = (0.0, 0.0, 0.0)
        return _ai_agent(FrozenLakeModelConfig(score_preferences=prefs, context_volatility=h), s, rng)
    if agent_id in LEARNING_EXPERIMENTS:
        la = agent_id in ("learn-likelihood", "learn-both")
        lc = agent_id in ("learn-preferences", "learn-both")
        mcfg = FrozenLakeModelConfig(
            score_preferences=(0.0, 0.0, 0.0), context_volatility=s["volatility_learning"],
            learn_likelihood=la, learn_preferences=lc, a_init=s["a_init"], c_init=s["c_init"],
        )
        return _ai_agent(mcfg, s, rng, LearningConfig(eta=s["eta"], learn_likelihood=la, learn_preferences=lc),
                         s["learning_action_mode"])
    raise ConfigError(f"unknown agent {agent_id!r}")


# --------------------------------------------------------------------------
# trials
# --------------------------------------------------------------------------


@dataclass
class TrialResult:
    scores: np.ndarray  # (episodes,)
    moves: np.ndarray
    positions: list | None = None  # per-episode paths (learning experiments)
    counts: list | None = None  # per-episode (a, c) snapshots
    trace_rows: list | None = None


def _trace_rows(episode, trace):
    rows = []
    for tau, info in enumerate(trace.diagnostics):
        if info.marginal is None:
            continue
        q = info.q[info.q > 0]
        rows.append({
            "episode": episode,
            "tau": tau + 1,
            "action": trace.actions[tau] if tau < len(trace.actions) else "",
            "G": ";".join(f"{g:.6f}" for g in info.G),
            "q_entropy": float(-(q * np.log(q)).sum()),
            "gamma": float(info.gamma),
            "F": float(info.q @ info.F),
        })
    return rows


def run_trial(task):
    """One agent, one trial, all episodes.  ``task`` is a plain tuple so it pickles."""
    experiment, agent_id, row, rewards, trial, seed, episodes, initial_context, settings, trace = task
    rng = trial_rng(seed, agent_id, trial, row)
    agent = make_agent(agent_id, experiment, settings, rng, rewards, episodes)
    switches = NONSTATIONARY_SWITCHES if experiment == "table1-nonstationary" else ()
    lake = LakeConfig(initial_context=initial_context, switches=switches,
                      r_goal=rewards[0], r_hole=rewards[1], r_frozen=rewards[2])
    env = FrozenLake(lake)
    scores = np.zeros(episodes)
    moves = np.zeros(episodes, dtype=int)
    learning = agent_id in LEARNING_EXPERIMENTS
    positions, counts, trace_rows = ([], [], []) if learning else (None, None, None)
    if trace and isinstance(agent, ActiveInferenceAgent) and trial == 0:
        trace_rows = trace_rows if trace_rows is not None else []
    else:
        trace = False
    for e in range(1, episodes + 1):
        env.set_episode(e)
        if experiment == "table2" and isinstance(agent, QLearningAgent):
            # greedy evaluation rollout is scored, then an exploratory training episode
            tr = agent.run_episode(env, e, epsilon=0.0, learn=False)
            env.set_episode(e)
            agent.run_episode(env, e)
        elif isinstance(agent, ActiveInferenceAgent):
            tr = agent.run_episode(env, record=bool(trace))
        else:
            tr = agent.run_episode(env, e)
        scores[e - 1] = episode_score(tr, lake.score_on_goal)
        moves[e - 1] = tr.moves
        if learning:
            positions.append(list(tr.positions))
            m = agent.model
            counts.append({
                "a": None if m.a is None else m.a[1].copy(),
                "c": None if m.c is None else m.c[1].copy(),
            })
        if trace:
            trace_rows.extend(_trace_rows(e, tr))
    return TrialResult(scores, moves, positions, counts, trace_rows if trace else None)


def _map(tasks, jobs):
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        return [run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # ordered results keep the reduction deterministic
        return list(pool.map(run_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# --------------------------------------------------------------------------
# aggregation and reports
# --------------------------------------------------------------------------


def aggregate(matrix):
    """Mean, normal-approximation 95% CI over trial means, and the per-episode curve."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise ValueError("cannot aggregate an empty score matrix")
    if m.ndim == 1:
        m = m[:, None]
    trial_means = m.mean(axis=1)
    mean = float(trial_means.mean())
    n = len(trial_means)
    sd = float(trial_means.std(ddof=1)) if n > 1 else 0.0
    half = 1.96 * sd / np.sqrt(n)
    return mean, (mean - half, mean + half), m.mean(axis=0)


@dataclass
class AgentSummary:
    agent: str
    mean: float
    ci_low: float
    ci_high: float
    moves: float
    curve: list
    row: list | None = None

    @property
    def label(self):
        return AGENT_LABELS.get(self.agent, self.agent)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    summaries: list
    switches: tuple = ()
    goal_cells: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def summary(self, agent, row=None):
        for s in self.summaries:
            if s.agent == agent and (row is None or list(s.row) == list(row)):
                return s
        raise KeyError((agent, row))

    def to_dict(self):
        return {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "experiment": self.experiment,
            "config": self.config,
            "switches": list(self.switches),
            "goal_cells": self.goal_cells,
            "agents": [
                {"agent": s.agent, "label": s.label, "row": s.row, "mean": s.mean,
                 "ci95": [s.ci_low, s.ci_high], "moves": s.moves, "curve": list(map(float, s.curve))}
                for s in self.summaries
            ],
            "extra": self.extra,
        }


def validate_summary(d):
    """Check a summary.json document; returns it unchanged or raises ConfigError."""
    if d.get("schema") != REPORT_SCHEMA:
        raise ConfigError("bad report schema")
    for key in ("experiment", "config", "switches", "agents"):
        if key not in d:
            raise ConfigError(f"report missing {key!r}")
    n = d["config"]["episodes"]
    for a in d["agents"]:
        lo, hi = a["ci95"]
        if not lo - 1e-9 <= a["mean"] <= hi + 1e-9:
            raise ConfigError(f"CI does not bracket the mean for {a['agent']}")
        if len(a["curve"]) != n:
            raise ConfigError(f"curve length {len(a['curve'])} != episodes {n}")
    return d


def _summarise(agent_id, results, row=None):
    scores = np.stack([r.scores for r in results])
    moves = np.stack([r.moves for r in results])
    mean, (lo, hi), curve = aggregate(scores)
    return AgentSummary(agent_id, mean, lo, hi, float(moves.mean()), curve.tolist(), row)


def run_experiment(config: RunConfig, progress=None):
    """Run every (agent, row, trial) and aggregate into an ExperimentReport."""
    exp = config.experiment
    rows = [tuple(r) for r in config.rows] if exp == "table2" else [(100.0, 0.0, 0.0)]
    tasks, keys = [], []
    for agent_id in config.agents:
        for r_i, rewards in enumerate(rows):
            for trial in range(config.trials):
                tasks.append((exp, agent_id, r_i, tuple(map(float, rewards)), trial, config.seed,
                              config.episodes, config.initial_context, config.settings, config.trace))
                keys.append((agent_id, r_i))
    results = _map(tasks, config.jobs)
    summaries, extra, traces = [], {}, {}
    for agent_id in config.agents:
        for r_i, rewards in enumerate(rows):
            res = [r for k, r in zip(keys, results) if k == (agent_id, r_i)]
            summaries.append(_summarise(agent_id, res, list(rewards) if exp == "table2" else None))
            if progress:
                progress(summaries[-1])
            if res[0].positions is not None:
                extra.setdefault("paths", {})[agent_id] = [r.positions for r in res]
                extra.setdefault("_counts", {})[agent_id] = [r.counts for r in res]
            if res[0].trace_rows:
                traces[agent_id if exp != "table2" else f"{agent_id}_row{r_i + 1}"] = res[0].trace_rows
    if traces:
        extra["_traces"] = traces
    goal = CONTEXT_CELLS[config.initial_context][0]
    return ExperimentReport(exp, config.to_dict(), summaries, config.switches,
                            {"initial_goal": goal, "initial_hole": CONTEXT_CELLS[config.initial_context][1]},
                            extra)


def run_table1(config: RunConfig | None = None, **kw):
    """Stationary and non-stationary reports for the five-agent roster."""
    base = (config.to_dict() if config else {"schema": SCHEMA}) | kw
    base.pop("schema", None)
    out = {}
    for exp in ("table1-stationary", "table1-nonstationary"):
        out[exp] = run_experiment(RunConfig(**{**base, "experiment": exp}))
    return out


def run_table2(config: RunConfig | None = None, **kw):
    base = (config.to_dict() if config else {}) | kw
    base.pop("schema", None)
    base["experiment"] = "table2"
    return run_experiment(RunConfig(**base))


def run_preference_learning(config: RunConfig | None = None, **kw):
    base = (config.to_dict() if config else {}) | kw
    base.pop("schema", None)
    base.pop("agents", None)
    return {exp: run_experiment(RunConfig(**{**base, "experiment": exp})) for exp in LEARNING_EXPERIMENTS}


# --------------------------------------------------------------------------
# output files
# --------------------------------------------------------------------------


def _fmt(x):
    return f"{x:.6f}"


def table_csv(report: ExperimentReport):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "row", "agent", "mean", "ci_low", "ci_high", "moves"])
    for s in report.summaries:
        row = "" if s.row is None else "/".join(f"{v:g}" for v in s.row)
        w.writerow([report.experiment, row, s.agent, _fmt(s.mean), _fmt(s.ci_low), _fmt(s.ci_high), _fmt(s.moves)])
    return buf.getvalue()


def curves_csv(report: ExperimentReport):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "row", "agent", "episode", "mean_score"])
    for s in report.summaries:
        row = "" if s.row is None else "/".join(f"{v:g}" for v in s.row)
        for e, v in enumerate(s.curve, start=1):
            w.writerow([report.experiment, row, s.agent, e, _fmt(v)])
    return buf.getvalue()


_COLOURS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def curves_svg(report: ExperimentReport, width=720, height=360):
    """Learning curves with dotted markers at context switches."""
    pad_l, pad_r, pad_t, pad_b = 50, 190, 20, 40
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    n = max(len(s.curve) for s in report.summaries)
    x = lambda e: pad_l + (e - 1) / max(n - 1, 1) * pw
    y = lambda v: pad_t + (1 - v / 100.0) * ph
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for v in (0, 25, 50, 75, 100):
        out.append(f'<text x="{pad_l - 6}" y="{y(v) + 4:.1f}" text-anchor="end">{v}</text>')
    out.append(f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">episode</text>')
    out.append(f'<text x="{pad_l}" y="{height - 22}" text-anchor="middle">1</text>')
    out.append(f'<text x="{pad_l + pw}" y="{height - 22}" text-anchor="middle">{n}</text>')
    for e in report.switches:
        if e <= n:
            out.append(f'<line x1="{x(e):.1f}" y1="{pad_t}" x2="{x(e):.1f}" y2="{pad_t + ph}" '
                       f'stroke="#999" stroke-dasharray="3,3"/>')
    for i, s in enumerate(report.summaries):
        col = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{x(e):.1f},{y(v):.1f}" for e, v in enumerate(s.curve, start=1))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.2" points="{pts}"/>')
        label = s.label + ("" if s.row is None else " " + "/".join(f"{v:g}" for v in s.row))
        ly = pad_t + 14 * (i + 1)
        out.append(f'<line x1="{width - pad_r + 10}" y1="{ly - 4}" x2="{width - pad_r + 28}" y2="{ly - 4}" stroke="{col}"/>')
        out.append(f'<text x="{width - pad_r + 32}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _matrix_csv(M):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows([[_fmt(v) for v in row] for row in np.atleast_2d(M)])
    return buf.getvalue()


def emit_report(report: ExperimentReport, out_dir, formats=("json", "csv", "svg")):
    """Write summary.json, table.csv, curves.csv, curves.svg (and counts/ for learning runs)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    doc = report.to_dict()
    counts = doc["extra"].pop("_counts", None)
    traces = doc["extra"].pop("_traces", None)
    if "json" in formats:
        p = out / "summary.json"
        p.write_text(json.dumps(validate_summary(doc), indent=1, sort_keys=True) + "\n")
        written.append(p)
    if "csv" in formats:
        for name, text in (("table.csv", table_csv(report)), ("curves.csv", curves_csv(report))):
            (out / name).write_text(text)
            written.append(out / name)
    if "svg" in formats:
        (out / "curves.svg").write_text(curves_svg(report))
        written.append(out / "curves.svg")
    if counts and report.config.get("dump_counts", True):
        cdir = out / "counts"
        cdir.mkdir(exist_ok=True)
        for agent_id, runs in counts.items():
            for r, episodes in enumerate(runs, start=1):
                for e, snap in enumerate(episodes, start=1):
                    for key in ("a", "c"):
                        if snap[key] is not None:
                            p = cdir / f"{agent_id}_run{r:02d}_ep{e:03d}_{key}.csv"
                            p.write_text(_matrix_csv(snap[key]))
                            written.append(p)
    if traces:
        for name, rows in traces.items():
            p = out / f"trace_{name}.csv"
            with open(p, "w", newline="") as f:
                w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
            written.append(p)
    return written

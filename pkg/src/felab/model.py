"""Tabular generative model for the 3x3 frozen lake.

Hidden states are the tensor product of a location factor (9 cells) and a
context factor (2 goal/hole layouts).  Joint indices are location-major::

    joint = location * n_contexts + context

Outcome modalities are the observed grid position (9) and a score
(positive / negative / neutral).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOG_FLOOR = 1e-16
PREFERENCE_FLOOR = -32.0

ACTIONS = ("right", "down", "up", "left")
MOVES = {"right": (0, 1), "down": (1, 0), "up": (-1, 0), "left": (0, -1)}
SCORE_OUTCOMES = ("positive", "negative", "neutral")
POSITIVE, NEGATIVE, NEUTRAL = 0, 1, 2


class ModelError(ValueError):
    """Raised when a generative model array fails validation."""


def safe_log(x):
    return np.log(np.maximum(x, LOG_FLOOR))


@dataclass(frozen=True)
class StateSpace:
    factors: tuple  # ((name, cardinality), ...)

    def __post_init__(self):
        for name, n in self.factors:
            if n < 1:
                raise ModelError(f"factor {name!r} has cardinality {n} < 1")

    @property
    def shape(self):
        return tuple(n for _, n in self.factors)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def names(self):
        return tuple(name for name, _ in self.factors)

    def to_joint(self, *idx):
        return int(np.ravel_multi_index(idx, self.shape))

    def from_joint(self, j):
        return tuple(int(i) for i in np.unravel_index(j, self.shape))

    def marginal(self, q, factor):
        """Marginal of a joint distribution over one factor."""
        axis = self.names.index(factor) if isinstance(factor, str) else factor
        q = np.asarray(q).reshape(self.shape)
        other = tuple(i for i in range(len(self.shape)) if i != axis)
        return q.sum(axis=other)


def normalize_counts(counts, name="counts"):
    """Column-normalise a non-negative count array (axis 0 is the outcome axis)."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ModelError(f"{name} has negative entries")
    totals = counts.sum(axis=0)
    bad = np.argwhere(totals <= 0)
    if bad.size:
        raise ModelError(f"{name} column {tuple(int(i) for i in bad[0])} has zero total")
    return counts / totals


@dataclass(frozen=True)
class PolicySet:
    """All action sequences of a given depth, with an activity mask."""

    actions: np.ndarray  # (n_policies, depth) int
    active: np.ndarray  # (n_policies,) bool

    @classmethod
    def enumerate(cls, n_actions, depth):
        seqs = np.array(list(itertools.product(range(n_actions), repeat=depth)), dtype=int)
        seqs = seqs.reshape(-1, depth)
        return cls(seqs, np.ones(len(seqs), dtype=bool))

    @property
    def depth(self):
        return self.actions.shape[1]

    def __len__(self):
        return len(self.actions)

    def with_active(self, active):
        active = np.asarray(active, dtype=bool)
        if not active.any():
            raise ModelError("policy set must keep at least one active policy")
        return PolicySet(self.actions, active)


@dataclass
class GenerativeModel:
    states: StateSpace
    A: list  # per modality: (n_outcomes, n_states)
    B: np.ndarray  # (n_actions, n_states, n_states), columns = from-state
    C: list  # per modality: (n_times, n_outcomes) log-preferences
    D: list  # per factor prior
    modalities: tuple = ("position", "score")
    actions: tuple = ACTIONS
    a: list | None = None  # Dirichlet counts on A (None entries = fixed)
    c: list | None = None  # Dirichlet counts on C (None entries = fixed)
    policy_depth: int = 3
    horizon: int = 15
    start: int = 0
    context_volatility: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_times(self):
        return self.horizon + 1

    @property
    def n_actions(self):
        return self.B.shape[0]

    @property
    def D_joint(self):
        d = np.array([1.0])
        for f in self.D:
            d = np.kron(d, f)
        return d

    def learns_A(self, m):
        return self.a is not None and self.a[m] is not None

    def learns_C(self, m):
        return self.c is not None and self.c[m] is not None

    def validate(self, atol=1e-10):
        S = self.states.size
        for m, A in enumerate(self.A):
            name = f"A[{self.modalities[m]}]"
            if A.shape[1] != S:
                raise ModelError(f"{name} has {A.shape[1]} columns, expected {S}")
            _check_stochastic(A, name, atol)
        if self.B.shape[1:] != (S, S):
            raise ModelError(f"B has shape {self.B.shape}, expected (U, {S}, {S})")
        for u in range(self.n_actions):
            _check_stochastic(self.B[u], f"B[{self.actions[u]}]", atol)
        for f, d in enumerate(self.D):
            if abs(d.sum() - 1) > atol or np.any(d < 0):
                raise ModelError(f"D[{self.states.names[f]}] is not a probability vector")
        for m, C in enumerate(self.C):
            if C.shape != (self.n_times, self.A[m].shape[0]):
                raise ModelError(f"C[{self.modalities[m]}] has shape {C.shape}")
            if not np.all(np.isfinite(C)):
                raise ModelError(f"C[{self.modalities[m]}] has non-finite entries")
        for kind, counts in (("a", self.a), ("c", self.c)):
            for m, x in enumerate(counts or []):
                if x is not None and np.any(x <= 0):
                    raise ModelError(f"{kind}[{self.modalities[m]}] has non-positive counts")
        return self

    def copy(self):
        cp = lambda xs: None if xs is None else [None if x is None else x.copy() for x in xs]
        return GenerativeModel(
            states=self.states, A=cp(self.A), B=self.B, C=cp(self.C), D=cp(self.D),
            modalities=self.modalities, actions=self.actions, a=cp(self.a), c=cp(self.c),
            policy_depth=self.policy_depth, horizon=self.horizon, start=self.start,
            context_volatility=self.context_volatility, meta=dict(self.meta),
        )

    def to_dict(self):
        lst = lambda xs: None if xs is None else [None if x is None else np.asarray(x).tolist() for x in xs]
        return {
            "states": [list(f) for f in self.states.factors],
            "modalities": list(self.modalities),
            "actions": list(self.actions),
            "A": lst(self.A),
            "B": self.B.tolist(),
            "C": lst(self.C),
            "D": lst(self.D),
            "a": lst(self.a),
            "c": lst(self.c),
            "policy_depth": self.policy_depth,
            "horizon": self.horizon,
            "start": self.start,
            "context_volatility": self.context_volatility,
        }


def _check_stochastic(M, name, atol):
    if np.any(M < 0):
        idx = tuple(int(i) for i in np.argwhere(M < 0)[0])
        raise ModelError(f"{name} has a negative entry at {idx}")
    sums = M.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1) > atol)
    if bad.size:
        raise ModelError(f"{name} column {int(bad[0])} sums to {sums[bad[0]]:.12g}")


# --------------------------------------------------------------------------
# frozen lake construction
# --------------------------------------------------------------------------


@dataclass
class FrozenLakeModelConfig:
    rows: int = 3
    cols: int = 3
    start: int = 1
    # context k (1-based) -> (goal, hole), 1-based cells
    contexts: tuple = ((8, 6), (6, 8))
    concentration: float = 100.0
    likelihood_noise: float = 1.0
    score_preferences: tuple = (4.0, -4.0, 0.0)
    position_preferences: tuple | None = None
    policy_depth: int = 3
    horizon: int = 15
    context_volatility: float = 0.0
    learn_likelihood: bool = False
    learn_preferences: bool = False
    a_init: float = 5.0
    c_init: float = 1.0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        grid = d.pop("grid", None)
        if grid:
            d.setdefault("rows", grid.get("rows", 3))
            d.setdefault("cols", grid.get("cols", 3))
        prefs = d.pop("preferences", None)
        if prefs:
            if "score" in prefs:
                d["score_preferences"] = tuple(prefs["score"])
            if "position" in prefs:
                d["position_preferences"] = tuple(prefs["position"])
        if "contexts" in d:
            d["contexts"] = tuple(tuple(c) for c in d["contexts"])
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known) - {"schema", "version"}
        if unknown:
            raise ModelError(f"unknown model config fields: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def grid_step(cell, action, rows=3, cols=3):
    """Deterministic move on the grid (0-based cells); off-grid moves stay put."""
    r, c = divmod(cell, cols)
    dr, dc = MOVES[ACTIONS[action]]
    r2, c2 = r + dr, c + dc
    if 0 <= r2 < rows and 0 <= c2 < cols:
        return r2 * cols + c2
    return cell


def transition_table(rows=3, cols=3, absorbing=()):
    """(n_actions, n_cells) array of next cells, absorbing cells map to themselves."""
    n = rows * cols
    table = np.empty((len(ACTIONS), n), dtype=int)
    for u in range(len(ACTIONS)):
        for s in range(n):
            table[u, s] = s if s in absorbing else grid_step(s, u, rows, cols)
    return table


def build_frozenlake_model(config: FrozenLakeModelConfig | None = None) -> GenerativeModel:
    cfg = config or FrozenLakeModelConfig()
    n_loc = cfg.rows * cfg.cols
    n_ctx = len(cfg.contexts)
    for g, h in cfg.contexts:
        for cell in (g, h):
            if not 1 <= cell <= n_loc:
                raise ModelError(f"context cell {cell} outside a {cfg.rows}x{cfg.cols} grid")
    if not 1 <= cfg.start <= n_loc:
        raise ModelError(f"start cell {cfg.start} outside the grid")
    states = StateSpace((("location", n_loc), ("context", n_ctx)))
    S = states.size
    absorbing = sorted({cell - 1 for pair in cfg.contexts for cell in pair})

    # position: identity over location, softened by unit counts
    a_pos = np.full((n_loc, S), float(cfg.likelihood_noise))
    a_score = np.zeros((3, S))
    for loc in range(n_loc):
        for k, (g, h) in enumerate(cfg.contexts):
            j = states.to_joint(loc, k)
            a_pos[loc, j] += cfg.concentration
            if loc == g - 1:
                a_score[POSITIVE, j] = 1.0
            elif loc == h - 1:
                a_score[NEGATIVE, j] = 1.0
            else:
                a_score[NEUTRAL, j] = 1.0
    A = [normalize_counts(a_pos, "A[position]"), normalize_counts(a_score, "A[score]")]

    table = transition_table(cfg.rows, cfg.cols, absorbing)
    B = np.zeros((len(ACTIONS), S, S))
    for u in range(len(ACTIONS)):
        for loc in range(n_loc):
            for k in range(n_ctx):
                B[u, states.to_joint(table[u, loc], k), states.to_joint(loc, k)] = 1.0

    T = cfg.horizon + 1
    C_pos = np.zeros((T, n_loc))
    if cfg.position_preferences is not None:
        C_pos[:] = np.asarray(cfg.position_preferences, dtype=float)
    C_score = np.tile(np.asarray(cfg.score_preferences, dtype=float), (T, 1))
    C = [np.maximum(C_pos, PREFERENCE_FLOOR), np.maximum(C_score, PREFERENCE_FLOOR)]

    D_loc = np.zeros(n_loc)
    D_loc[cfg.start - 1] = 1.0
    D = [D_loc, np.full(n_ctx, 1.0 / n_ctx)]

    a = c = None
    if cfg.learn_likelihood:
        a = [None, np.full((3, S), float(cfg.a_init))]
        A[1] = normalize_counts(a[1], "a[score]")
    if cfg.learn_preferences:
        c = [None, np.full((T, 3), float(cfg.c_init))]
        C[1] = np.log(c[1] / c[1].sum(axis=1, keepdims=True))

    model = GenerativeModel(
        states=states, A=A, B=B, C=C, D=D, a=a, c=c,
        policy_depth=cfg.policy_depth, horizon=cfg.horizon, start=cfg.start - 1,
        context_volatility=cfg.context_volatility,
        meta={"contexts": [list(p) for p in cfg.contexts], "rows": cfg.rows, "cols": cfg.cols},
    )
    return model.validate()


def preferences_from_rewards(rewards, scale=None):
    """Map scalar rewards to log-preferences (nats).

    ``C(o) = scale * sign(r) * log(1 + |r|)``; the default scale sends a
    reward of -100 to -log(5).  ``rewards`` maps outcome -> reward; a dict
    comes back with the same keys.
    """
    if scale is None:
        scale = np.log(5.0) / np.log(101.0)
    out = {}
    for k, r in rewards.items():
        r = float(r)
        if not np.isfinite(r):
            raise ModelError(f"reward for {k!r} is not finite")
        out[k] = max(scale * np.sign(r) * np.log1p(abs(r)), PREFERENCE_FLOOR)
    return out


def shaped_model_config(r_goal, r_hole, r_frozen, **kw):
    """Model config whose score preferences encode a reward-shaping row."""
    c = preferences_from_rewards({"G": r_goal, "H": r_hole, "F": r_frozen})
    return FrozenLakeModelConfig(score_preferences=(c["G"], c["H"], c["F"]), **kw)

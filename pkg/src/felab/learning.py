"""Dirichlet count updates and between-episode belief carry-over."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GenerativeModel, normalize_counts, safe_log


@dataclass
class LearningConfig:
    eta: float = 1.0
    learn_likelihood: bool = True
    learn_preferences: bool = True
    # repeat the absorbing outcome up to the end of the horizon
    pad_absorbing: bool = True

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("learning rate must be non-negative")


def pad_episode(outcomes, beliefs, n_times):
    """Repeat the last outcome row and belief until ``n_times`` entries."""
    outcomes = np.asarray(outcomes, dtype=int)
    beliefs = np.asarray(beliefs, dtype=float)
    extra = n_times - len(outcomes)
    if extra <= 0:
        return outcomes[:n_times], beliefs[:n_times]
    outcomes = np.concatenate([outcomes, np.repeat(outcomes[-1:], extra, axis=0)])
    beliefs = np.concatenate([beliefs, np.repeat(beliefs[-1:], extra, axis=0)])
    return outcomes, beliefs


def accumulate_likelihood(a, outcomes, beliefs, eta=1.0):
    """``a += eta * sum_t onehot(o_t) outer s_t`` for one modality.

    ``outcomes`` is ``(T,)`` of outcome indices and ``beliefs`` ``(T, S)``.
    Returns a new array.
    """
    a = np.array(a, dtype=float, copy=True)
    beliefs = np.asarray(beliefs, dtype=float)
    for o, s in zip(np.asarray(outcomes, dtype=int), beliefs):
        a[o] += eta * s
    return a


def accumulate_preferences(c, outcomes, eta=1.0):
    """``c[t, o_t] += eta`` for each time step; ``c`` is ``(T, O)``."""
    c = np.array(c, dtype=float, copy=True)
    outcomes = np.asarray(outcomes, dtype=int)
    c[np.arange(len(outcomes)), outcomes] += eta
    return c


def preferences_from_counts(c):
    """Log of the time-wise normalised preference counts."""
    c = np.asarray(c, dtype=float)
    return safe_log(c / c.sum(axis=-1, keepdims=True))


def carry_forward(model: GenerativeModel, posterior, volatility=None):
    """Initial-state priors for the next episode.

    Location resets to the start cell; the context prior becomes the final
    context posterior, mixed with a uniform distribution at rate
    ``volatility`` (the model's own rate if not given).
    """
    h = model.context_volatility if volatility is None else volatility
    if not 0.0 <= h <= 1.0:
        raise ValueError("volatility must lie in [0, 1]")
    ctx = model.states.marginal(np.asarray(posterior, dtype=float), 1)
    ctx = (1.0 - h) * ctx + h / ctx.size
    loc = np.zeros(model.states.shape[0])
    loc[model.start] = 1.0
    return [loc, ctx / ctx.sum()]


def learn_from_episode(model: GenerativeModel, outcomes, beliefs, config: LearningConfig | None = None):
    """Apply count updates from one episode and return an updated model.

    ``outcomes`` is ``(t, n_modalities)`` for the observed steps and
    ``beliefs`` the matching ``(t, S)`` posteriors.  The returned model
    shares nothing mutable with the input.
    """
    config = config or LearningConfig()
    outcomes = np.asarray(outcomes, dtype=int)
    beliefs = np.asarray(beliefs, dtype=float)
    if config.pad_absorbing:
        outcomes, beliefs = pad_episode(outcomes, beliefs, model.n_times)
    new = model.copy()
    for m in range(len(model.A)):
        if config.learn_likelihood and model.learns_A(m):
            new.a[m] = accumulate_likelihood(model.a[m], outcomes[:, m], beliefs, config.eta)
            new.A[m] = normalize_counts(new.a[m], f"a[{m}]")
        if config.learn_preferences and model.learns_C(m):
            c = model.c[m]
            new.c[m] = accumulate_preferences(c, outcomes[: c.shape[0], m], config.eta)
            new.C[m] = preferences_from_counts(new.c[m])
    return new

"""Active-inference agent: receding-horizon planning over depth-d policies."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .env import AgentTrace, FrozenLake
from .inference import (
    action_marginal,
    bayesian_model_average,
    expected_free_energy,
    log_preferences,
    novelty_matrix,
    prune_policies,
    select_action,
    softmax,
    update_precision,
    update_states,
)
from .learning import LearningConfig, carry_forward, learn_from_episode
from .model import GenerativeModel, PolicySet, safe_log


@dataclass
class AgentConfig:
    step: float = 4.0  # gradient step divisor
    sweeps: int = 16
    tol: float = 1e-4
    beta_prior: float = 1.0
    prune_threshold: float = 1.0 / 128
    action_mode: str = "sample"  # or "argmax"
    action_precision: float = 512.0
    random_ties: bool = False  # argmax mode: break exact ties at random
    novelty: bool = True
    learning: LearningConfig = field(default_factory=LearningConfig)
    cache: bool = True


@dataclass
class StepInfo:
    t: int
    posterior: np.ndarray  # averaged belief over the present state
    marginal: np.ndarray | None = None  # over first actions
    G: np.ndarray | None = None
    F: np.ndarray | None = None
    q: np.ndarray | None = None
    gamma: float = float("nan")
    converged: bool = True


# planning results shared between agents with identical fixed models
_SHARED_CACHE: dict = {}
_CACHE_LIMIT = 200_000


def _fingerprint(model: GenerativeModel, config: AgentConfig):
    h = hashlib.sha1()
    for arr in [*model.A, model.B, *model.C]:
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(repr((model.policy_depth, model.horizon, config.step, config.sweeps, config.tol,
                   config.beta_prior, config.prune_threshold)).encode())
    return h.hexdigest()


class ActiveInferenceAgent:
    """Perceives, plans and acts by minimising (expected) free energy.

    The agent keeps its generative model across episodes; the context prior
    is carried forward and Dirichlet counts are updated at episode end.
    """

    def __init__(self, model: GenerativeModel, config: AgentConfig | None = None, rng=None):
        self.model = model.copy()
        self.config = config or AgentConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        self._policies = {}
        self._pending = None
        self._learns = model.a is not None or model.c is not None
        self._key = None if self._learns or not self.config.cache else _fingerprint(model, self.config)
        self.episodes = 0

    # -- planning ---------------------------------------------------------

    def policies(self, depth):
        if depth not in self._policies:
            ps = PolicySet.enumerate(self.model.n_actions, depth)
            self._policies[depth] = (ps, self.model.B[ps.actions])
        return self._policies[depth]

    def _novelty(self):
        if not (self.config.novelty and self.model.a is not None):
            return None
        W = []
        for m, a in enumerate(self.model.a):
            if a is None:
                W.append(None)
            else:
                W.append(novelty_matrix(a + self._pending[m]))
        return W

    def infer(self, prior, obs, t):
        """Posterior over the present state and, if moves remain, the action marginal."""
        if self._key is not None:
            key = (self._key, prior.tobytes(), obs, t)
            hit = _SHARED_CACHE.get(key)
            if hit is not None:
                return hit
        info = self._infer(prior, obs, t)
        if self._key is not None:
            if len(_SHARED_CACHE) > _CACHE_LIMIT:
                _SHARED_CACHE.clear()
            _SHARED_CACHE[key] = info
        return info

    def _infer(self, prior, obs, t):
        model, cfg = self.model, self.config
        loglik = sum(safe_log(A[o]) for A, o in zip(model.A, obs))
        log_prior = safe_log(prior)
        k = min(model.policy_depth, model.horizon - t)
        if k <= 0:
            return StepInfo(t, softmax(log_prior + loglik))
        ps, B_seq = self.policies(k)
        S = prior.size
        L = np.zeros((k + 1, S))
        L[0] = loglik
        upd = update_states(None, log_prior, L, B_seq, cfg.step, cfg.sweeps, cfg.tol)
        log_C = [log_preferences(C[t + 1 : t + 1 + k]) for C in model.C]
        G, _ = expected_free_energy(upd.s[:, 1:], model.A, log_C, self._novelty())
        gamma, q, _, _ = update_precision(upd.F, G, cfg.beta_prior, cfg.step)
        active, q = prune_policies(q, cfg.prune_threshold)
        post = bayesian_model_average(upd.s[:, 0], q)
        marginal = action_marginal(q, ps.actions[:, 0], model.n_actions)
        return StepInfo(t, post, marginal, G, upd.F, q, gamma, upd.converged)

    # -- acting -----------------------------------------------------------

    def act(self, info: StepInfo):
        cfg = self.config
        return select_action(info.marginal, cfg.action_mode, self.rng, cfg.action_precision, cfg.random_ties)

    def _observe(self, obs, s):
        if self._pending is None:
            return
        for m, o in enumerate(obs):
            if self._pending[m] is not None:
                self._pending[m][o] += self.config.learning.eta * s

    def run_episode(self, env: FrozenLake, record=False):
        """Play one episode in ``env`` (already reset) and learn from it."""
        model = self.model
        trace = AgentTrace(context=env.context, positions=[env.position])
        if model.a is not None and self.config.novelty:
            self._pending = [None if a is None else np.zeros_like(a) for a in model.a]
        else:
            self._pending = None
        prior = model.D_joint
        obs = env._outcome()
        beliefs, outcomes = [], []
        t = 0
        while True:
            if self._pending is not None:
                # count the present outcome before planning the next move
                loglik = sum(safe_log(A[o]) for A, o in zip(model.A, obs))
                self._observe(obs, softmax(safe_log(prior) + loglik))
            info = self.infer(prior, obs, t)
            beliefs.append(info.posterior)
            outcomes.append(obs)
            trace.outcomes.append(obs)
            if record:
                trace.diagnostics.append(info)
            if env.done or info.marginal is None:
                break
            u = self.act(info)
            res = env.step(u)
            trace.actions.append(u)
            trace.positions.append(res.position)
            trace.rewards.append(res.reward)
            prior = model.B[u] @ info.posterior
            obs = res.outcome
            t += 1
        if env.position == env.goal:
            trace.reached = "goal"
        elif env.position == env.hole:
            trace.reached = "hole"
        self.end_episode(np.array(outcomes), np.array(beliefs))
        return trace

    def end_episode(self, outcomes, beliefs):
        if self._learns:
            self.model = learn_from_episode(self.model, outcomes, beliefs, self.config.learning)
        self.model.D = carry_forward(self.model, beliefs[-1])
        self.episodes += 1

"""Tabular Q-learning and Thompson-sampling model-based RL on lake positions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .env import AgentTrace, FrozenLake
from .model import grid_step

N_ACTIONS = 4


class PlanningError(RuntimeError):
    pass


def greedy(row):
    """Argmax with lowest-index tie-break."""
    return int(np.argmax(row))


def random_argmax(row, rng):
    """Argmax with ties broken uniformly at random."""
    best = np.flatnonzero(row == row.max())
    return int(best[0]) if best.size == 1 else int(rng.choice(best))


# --------------------------------------------------------------------------
# Q-learning
# --------------------------------------------------------------------------


def linear_decay(n_episodes):
    """Exploration rate falling linearly from 1 towards 0 over the run."""
    return lambda episode: max(0.0, 1.0 - (episode - 1) / n_episodes)


def constant(eps):
    return lambda episode: eps


class QLearningAgent:
    def __init__(self, n_states=9, alpha=0.5, discount=0.99, epsilon=0.1, rng=None, random_ties=True):
        self.Q = np.zeros((n_states, N_ACTIONS))
        self.random_ties = random_ties
        self.alpha = alpha
        self.discount = discount
        self.schedule = epsilon if callable(epsilon) else constant(epsilon)
        self.rng = rng if rng is not None else np.random.default_rng()

    def q_step(self, s, eps):
        if not 0.0 <= eps <= 1.0:
            raise ValueError("exploration rate must lie in [0, 1]")
        if eps == 0.0:
            return greedy(self.Q[s])
        if self.rng.random() < eps:
            return int(self.rng.integers(N_ACTIONS))
        if self.random_ties:
            return random_argmax(self.Q[s], self.rng)
        return greedy(self.Q[s])

    def q_update(self, s, a, r, s2, terminal):
        target = r if terminal else r + self.discount * self.Q[s2].max()
        self.Q[s, a] = (1 - self.alpha) * self.Q[s, a] + self.alpha * target

    def run_episode(self, env: FrozenLake, episode=1, epsilon=None, learn=True):
        eps = self.schedule(episode) if epsilon is None else epsilon
        trace = AgentTrace(context=env.context, positions=[env.position])
        s = env.position - 1
        while not env.done:
            a = self.q_step(s, eps)
            res = env.step(a)
            s2 = res.position - 1
            absorbing = res.position in (env.goal, env.hole)
            if learn:
                self.q_update(s, a, res.reward, s2, absorbing)
            trace.actions.append(a)
            trace.positions.append(res.position)
            trace.outcomes.append(res.outcome)
            trace.rewards.append(res.reward)
            s = s2
        trace.reached = _reached(env)
        return trace


def _reached(env):
    if env.position == env.goal:
        return "goal"
    if env.position == env.hole:
        return "hole"
    return "none"


# --------------------------------------------------------------------------
# Bayesian model-based RL
# --------------------------------------------------------------------------


def value_iteration(P, R, terminal, discount=0.9, tol=1e-6, max_sweeps=1000, record=False):
    """Optimal Q for a batch of MDPs.

    ``P`` is ``(..., S, A, S)`` transition probabilities, ``R`` the
    ``(..., S)`` reward for entering a state and ``terminal`` an ``(S,)``
    mask of states with no future value.  Returns ``(Q, sweeps)`` or, with
    ``record``, ``(Q, residuals)``.
    """
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    cont = ~np.asarray(terminal, dtype=bool)
    V = np.zeros(P.shape[:-3] + P.shape[-1:])
    residuals = []
    for n in range(1, max_sweeps + 1):
        Q = np.einsum("...sat,...t->...sa", P, R + discount * V * cont)
        V_new = np.where(cont, Q.max(axis=-1), 0.0)
        res = float(np.abs(V_new - V).max())
        residuals.append(res)
        V = V_new
        if res < tol:
            break
    else:
        raise PlanningError(f"value iteration did not converge in {max_sweeps} sweeps (residual {res:.3g})")
    Q = np.einsum("...sat,...t->...sa", P, R + discount * V * cont)
    return (Q, residuals) if record else (Q, n)


@njit(cache=True)
def _vi_move_or_stay(theta, intended, R, cont, discount, tol, max_sweeps):
    # each (s, a) reaches intended[s, a] with prob theta, else stays at s
    k, S, A = theta.shape
    Q = np.zeros((k, S, A))
    V = np.zeros(S)
    Vn = np.zeros(S)
    worst = 0
    for i in range(k):
        V[:] = 0.0
        n = 0
        for n in range(1, max_sweeps + 1):
            res = 0.0
            for s in range(S):
                if not cont[s]:
                    Vn[s] = 0.0
                    continue
                stay = R[i, s] + discount * V[s]
                best = -np.inf
                for a in range(A):
                    t = intended[s, a]
                    go = R[i, t] + (discount * V[t] if cont[t] else 0.0)
                    q = theta[i, s, a] * go + (1.0 - theta[i, s, a]) * stay
                    if q > best:
                        best = q
                Vn[s] = best
                d = abs(best - V[s])
                if d > res:
                    res = d
            V[:] = Vn
            if res < tol:
                break
        if res >= tol:
            return Q, -1
        if n > worst:
            worst = n
        for s in range(S):
            stay = R[i, s] + (discount * V[s] if cont[s] else 0.0)
            for a in range(A):
                t = intended[s, a]
                go = R[i, t] + (discount * V[t] if cont[t] else 0.0)
                Q[i, s, a] = theta[i, s, a] * go + (1.0 - theta[i, s, a]) * stay
    return Q, worst


@dataclass
class BetaBernoulliModel:
    """Beta pseudo-counts for 'intended move succeeds' and 'goal sits at cell 8'."""

    move_a: np.ndarray  # (S, A)
    move_b: np.ndarray
    reward_a: float = 1.0  # evidence for the goal at 8
    reward_b: float = 1.0  # evidence for the goal at 6

    @classmethod
    def flat(cls, n_states=9, prior=1.0):
        return cls(np.full((n_states, N_ACTIONS), prior), np.full((n_states, N_ACTIONS), prior), prior, prior)

    def copy(self):
        return BetaBernoulliModel(self.move_a.copy(), self.move_b.copy(), self.reward_a, self.reward_b)

    @property
    def reward_mean(self):
        return self.reward_a / (self.reward_a + self.reward_b)


class BayesianRLAgent:
    """Thompson sampling over a Beta-Bernoulli model of the lake.

    Transitions: each (cell, action) either moves to its intended neighbour
    or leaves the agent in place.  Rewards: one Beta over which of the two
    absorbing cells holds the goal.  Before every move a batch of ``k``
    models is sampled and their optimal Q-functions averaged.
    """

    def __init__(self, rewards=(100.0, 0.0, 0.0), rows=3, cols=3, cells=(8, 6), k=1,
                 discount=0.9, tol=1e-6, max_sweeps=1000, random_ties=True, rng=None):
        self.rows, self.cols = rows, cols
        self.S = rows * cols
        self.r_goal, self.r_hole, self.r_frozen = map(float, rewards)
        self.cells = (cells[0] - 1, cells[1] - 1)  # 0-based (goal-if-context-1, other)
        self.k = k
        self.discount, self.tol, self.max_sweeps = discount, tol, max_sweeps
        self.random_ties = random_ties
        self.rng = rng if rng is not None else np.random.default_rng()
        self.model = BetaBernoulliModel.flat(self.S)
        self.intended = np.array([[grid_step(s, a, rows, cols) for a in range(N_ACTIONS)] for s in range(self.S)])
        self.terminal = np.zeros(self.S, dtype=bool)
        self.terminal[list(self.cells)] = True
        self.Q = np.zeros((self.S, N_ACTIONS))

    # model -> sampled MDPs
    def sample_parameters(self, k=None):
        """Draw ``k`` move-success probabilities and goal-location beliefs."""
        k = self.k if k is None else k
        m = self.model
        theta = self.rng.beta(m.move_a, m.move_b, size=(k,) + m.move_a.shape)
        phi = self.rng.beta(m.reward_a, m.reward_b, size=k)
        return theta, phi

    def rewards(self, phi):
        R = np.full((len(phi), self.S), self.r_frozen)
        c8, c6 = self.cells
        R[:, c8] = phi * self.r_goal + (1 - phi) * self.r_hole
        R[:, c6] = (1 - phi) * self.r_goal + phi * self.r_hole
        return R

    def transitions(self, theta):
        """Dense ``(k, S, A, S)`` kernels for sampled move probabilities."""
        k = theta.shape[0]
        P = np.zeros((k, self.S, N_ACTIONS, self.S))
        s_idx, a_idx = np.meshgrid(np.arange(self.S), np.arange(N_ACTIONS), indexing="ij")
        P[:, s_idx, a_idx, s_idx] += 1.0 - theta
        P[:, s_idx, a_idx, self.intended] += theta
        return P

    def sample_mdps(self, k=None):
        theta, phi = self.sample_parameters(k)
        return self.transitions(theta), self.rewards(phi)

    def solve(self, theta, phi):
        """Optimal Q of every sampled MDP, ``(k, S, A)``."""
        Q, n = _vi_move_or_stay(theta, self.intended, self.rewards(phi), ~self.terminal,
                                self.discount, self.tol, self.max_sweeps)
        if n < 0:
            raise PlanningError(f"value iteration did not converge in {self.max_sweeps} sweeps")
        return Q

    def thompson_plan(self, k=None):
        theta, phi = self.sample_parameters(k)
        self.Q = self.solve(theta, phi).mean(axis=0)
        return self.Q

    def posterior_update(self, s, a, r, s2):
        m = self.model
        if s2 == self.intended[s, a]:
            m.move_a[s, a] += 1
        else:
            m.move_b[s, a] += 1
        if s2 in self.cells and self.r_goal != self.r_hole:
            at8 = s2 == self.cells[0]
            got_goal = r == self.r_goal
            if at8 == got_goal:
                m.reward_a += 1
            else:
                m.reward_b += 1

    def choose(self, s):
        return random_argmax(self.Q[s], self.rng) if self.random_ties else greedy(self.Q[s])

    def run_episode(self, env: FrozenLake, episode=1):
        trace = AgentTrace(context=env.context, positions=[env.position])
        s = env.position - 1
        while not env.done:
            self.thompson_plan()
            a = self.choose(s)
            res = env.step(a)
            s2 = res.position - 1
            self.posterior_update(s, a, res.reward, s2)
            trace.actions.append(a)
            trace.positions.append(res.position)
            trace.outcomes.append(res.outcome)
            trace.rewards.append(res.reward)
            s = s2
        trace.reached = _reached(env)
        return trace

"""Belief updating, expected free energy and action selection.

Arrays are vectorised over policies: beliefs have shape
``(n_policies, n_slots, n_states)`` where slot 0 is the present time step
and later slots are the planned future.  Everything is in nats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import LOG_FLOOR, safe_log


def softmax(x, axis=-1):
    x = np.asarray(x, dtype=float)
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def kl_divergence(q, p):
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError(f"shape mismatch: {q.shape} vs {p.shape}")
    nz = q > 0
    return float(np.sum(q[nz] * (np.log(q[nz]) - np.log(np.maximum(p[nz], LOG_FLOOR)))))


def entropy(p, axis=-1):
    p = np.asarray(p, dtype=float)
    return -np.sum(p * safe_log(p), axis=axis)


# --------------------------------------------------------------------------
# perception
# --------------------------------------------------------------------------


def _forward(B_seq, s, j):
    # predicted state at slot j from slot j-1
    return np.einsum("pij,pj->pi", B_seq[:, j - 1], s[:, j - 1])


def variational_free_energy(s, log_prior, loglik, B_seq):
    """Free energy of a belief path under each policy.

    ``s`` is ``(P, L, S)``; ``log_prior`` is the log prior over the first
    slot; ``loglik`` is ``(L, S)`` with zero rows for unobserved slots and
    ``B_seq`` is ``(P, L-1, S, S)``.  Returns ``(P,)``.
    """
    s = np.asarray(s, dtype=float)
    logs = np.log(np.maximum(s, 1e-300))
    F = np.einsum("ps,ps->p", s[:, 0], logs[:, 0] - log_prior - loglik[0])
    for j in range(1, s.shape[1]):
        fwd = safe_log(_forward(B_seq, s, j))
        F += np.einsum("ps,ps->p", s[:, j], logs[:, j] - fwd - loglik[j])
    return F


def forward_potentials(log_prior, loglik, B_seq):
    """Log-potentials of the filtered present state rolled forward under each policy."""
    P, L = B_seq.shape[0], B_seq.shape[1] + 1
    v = np.empty((P, L, loglik.shape[-1]))
    v[:, 0] = log_prior + loglik[0]
    for j in range(1, L):
        prev = softmax(v[:, j - 1])
        v[:, j] = safe_log(np.einsum("pij,pj->pi", B_seq[:, j - 1], prev)) + loglik[j]
    return v


@dataclass
class StateUpdate:
    s: np.ndarray
    F: np.ndarray
    sweeps: int
    converged: bool
    max_error: float
    history: list | None = None


def update_states(s, log_prior, loglik, B_seq, step=4.0, sweeps=16, tol=1e-4, record=False):
    """Gradient descent on free energy with respect to the belief path.

    Each sweep visits the slots in temporal order.  The prediction error at
    slot ``j`` combines the likelihood of its outcome, the forward message
    ``log(B s[j-1])`` (log prior at the first slot) and the backward message
    ``B^T (s[j+1] / B s[j])`` minus ``log s[j]``; log-potentials move by
    ``error / step`` and beliefs are their softmax.  With ``s=None`` the
    path starts from :func:`forward_potentials`.
    """
    if s is None:
        v = forward_potentials(log_prior, loglik, B_seq)
    else:
        v = safe_log(np.asarray(s, dtype=float))
    s = softmax(v)
    P, L, _ = s.shape
    history = [variational_free_energy(s, log_prior, loglik, B_seq)] if record else None
    max_err = np.inf
    n = 0
    for n in range(1, sweeps + 1):
        max_err = 0.0
        for j in range(L):
            fwd = log_prior if j == 0 else safe_log(_forward(B_seq, s, j))
            target = fwd + loglik[j]
            if j < L - 1:
                pred = np.einsum("pij,pj->pi", B_seq[:, j], s[:, j])
                ratio = s[:, j + 1] / np.maximum(pred, LOG_FLOOR)
                target = target + np.einsum("pij,pi->pj", B_seq[:, j], ratio)
            logs = v[:, j] - logsumexp(v[:, j], axis=-1, keepdims=True)
            err = target - logs
            err = err - np.sum(s[:, j] * err, axis=-1, keepdims=True)
            max_err = max(max_err, float(np.abs(err).max()))
            v[:, j] += err / step
            s[:, j] = softmax(v[:, j])
        if record:
            history.append(variational_free_energy(s, log_prior, loglik, B_seq))
        if max_err < tol:
            break
    F = variational_free_energy(s, log_prior, loglik, B_seq)
    return StateUpdate(s, F, n, max_err < tol, max_err, history)


# --------------------------------------------------------------------------
# expected free energy
# --------------------------------------------------------------------------


@dataclass
class EFEBreakdown:
    risk: np.ndarray  # (P, K)
    ambiguity: np.ndarray
    novelty: np.ndarray
    epistemic: np.ndarray | None = None
    extrinsic: np.ndarray | None = None

    @property
    def total(self):
        return self.risk + self.ambiguity - self.novelty


def ambiguity_vector(A):
    """Per-state outcome entropy summed over modalities."""
    return sum(entropy(Am, axis=0) for Am in A)


def novelty_matrix(a):
    """``W = (1/a - 1/sum(a)) / 2`` for Dirichlet counts ``a``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (1.0 / a - 1.0 / a.sum(axis=0, keepdims=True))


def log_preferences(C):
    """Normalise log-preferences into log-probabilities over outcomes."""
    C = np.asarray(C, dtype=float)
    return C - logsumexp(C, axis=-1, keepdims=True)


def expected_free_energy(s_future, A, log_C, W=None):
    """Risk + ambiguity (minus novelty) for each policy and future slot.

    ``s_future`` is ``(P, K, S)``; ``log_C[m]`` is ``(K, O_m)`` normalised
    log-preferences; ``W[m]`` (optional) is a novelty matrix for modality
    ``m``.  Returns ``(G, breakdown)`` with ``G`` of shape ``(P,)``.
    """
    P, K, _ = s_future.shape
    risk = np.zeros((P, K))
    novelty = np.zeros((P, K))
    for m, Am in enumerate(A):
        o = np.einsum("os,pks->pko", Am, s_future)
        risk += np.sum(o * (safe_log(o) - log_C[m][None]), axis=-1)
        if W is not None and W[m] is not None:
            novelty += np.einsum("pko,os,pks->pk", o, W[m], s_future)
    ambiguity = s_future @ ambiguity_vector(A)
    br = EFEBreakdown(risk, ambiguity, novelty)
    return br.total.sum(axis=1), br


def expected_free_energy_dual(s_future, A, log_C, W=None):
    """The same quantity written as -(epistemic value) - (extrinsic value).

    Epistemic value is the mutual information between hidden states and
    outcomes under the predictive joint; extrinsic value is the expected
    log-preference.  Computed from the joint directly, independently of
    :func:`expected_free_energy`.
    """
    P, K, _ = s_future.shape
    epistemic = np.zeros((P, K))
    extrinsic = np.zeros((P, K))
    novelty = np.zeros((P, K))
    for m, Am in enumerate(A):
        joint = Am[None, None] * s_future[:, :, None, :]  # (P,K,O,S)
        o = joint.sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(joint > 0, Am[None, None] / np.maximum(o[..., None], LOG_FLOOR), 1.0)
            epistemic += np.sum(np.where(joint > 0, joint * np.log(ratio), 0.0), axis=(-1, -2))
        extrinsic += np.einsum("pko,ko->pk", o, log_C[m])
        if W is not None and W[m] is not None:
            Ws = s_future @ W[m].T  # (P,K,O)
            novelty += np.sum(o * Ws, axis=-1)
    G = -(epistemic + extrinsic) - novelty
    br = EFEBreakdown(None, None, novelty, epistemic, extrinsic)
    return G.sum(axis=1), br


# --------------------------------------------------------------------------
# policies and precision
# --------------------------------------------------------------------------


def policy_posterior(F, G, gamma):
    """Posterior ``softmax(-gamma G - F)`` and prior ``softmax(-gamma G)``."""
    G = np.asarray(G, dtype=float)
    F = np.asarray(F, dtype=float)
    return softmax(-gamma * G - F), softmax(-gamma * G)


def update_precision(F, G, beta_prior=1.0, step=4.0, tol=1e-8, max_iter=1000, beta_min=1e-3):
    """Iterate the precision prediction error to its fixed point.

    ``beta <- beta - err/step`` with
    ``err = (beta - beta_prior) - (q - pi0) . G``, where ``q`` and ``pi0``
    are re-evaluated at ``gamma = 1/beta`` each iteration.  Returns
    ``(gamma, q, pi0, residual)``.
    """
    G = np.asarray(G, dtype=float)
    beta = float(beta_prior)
    for _ in range(max_iter):
        q, pi0 = policy_posterior(F, G, 1.0 / beta)
        err = (beta - beta_prior) - float((q - pi0) @ G)
        if abs(err) < tol:
            break
        beta = max(beta - err / step, beta_min)
    q, pi0 = policy_posterior(F, G, 1.0 / beta)
    residual = (beta - beta_prior) - float((q - pi0) @ G)
    if beta <= beta_min:
        residual = 0.0
    return 1.0 / beta, q, pi0, residual


def prune_policies(q, threshold=1.0 / 128, active=None):
    """Deactivate policies less than ``threshold`` times as likely as the best.

    Returns ``(active_mask, q_renormalised)``; inactive policies get zero mass.
    """
    q = np.asarray(q, dtype=float)
    prev = np.ones_like(q, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    best = q[prev].max()
    mask = prev & (q >= threshold * best)
    q = np.where(mask, q, 0.0)
    return mask, q / q.sum()


def bayesian_model_average(s, q):
    """Policy-weighted average of per-policy beliefs; ``s`` is ``(P, ..., S)``."""
    out = np.tensordot(np.asarray(q, dtype=float), np.asarray(s, dtype=float), axes=1)
    return out / out.sum(axis=-1, keepdims=True)


def action_marginal(q, first_actions, n_actions):
    """Posterior mass on each first action."""
    return np.bincount(np.asarray(first_actions), weights=np.asarray(q, dtype=float), minlength=n_actions)


def select_action(marginal, mode="sample", rng=None, precision=1.0, random_ties=False, rtol=1e-9):
    """Pick the next action from its posterior marginal.

    ``sample`` draws from the marginal sharpened by ``precision``
    (``p ~ marginal ** precision``).  ``argmax`` takes the most probable
    action: lowest index on ties, or a uniform pick among (near-)exact
    ties when ``random_ties`` is set.
    """
    marginal = np.asarray(marginal, dtype=float)
    if mode == "argmax":
        if not random_ties:
            return int(np.argmax(marginal))
        best = np.flatnonzero(marginal >= marginal.max() * (1 - rtol))
        return int(best[0]) if best.size == 1 else int(rng.choice(best))
    if mode != "sample":
        raise ValueError(f"unknown action selection mode {mode!r}")
    p = softmax(precision * safe_log(marginal))
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(p), u, side="right"), p.size - 1))

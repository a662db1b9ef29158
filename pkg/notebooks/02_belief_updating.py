# %% [markdown]
# # Perception and planning in one step
#
# Beliefs about the present and the next three slots are refined by
# gradient descent on free energy; policies are scored by expected free
# energy; precision and the action marginal follow.

# %%
import numpy as np

from felab.agent import ActiveInferenceAgent, AgentConfig
from felab.env import FrozenLake
from felab.inference import expected_free_energy, expected_free_energy_dual, update_states
from felab.model import ACTIONS, build_frozenlake_model

rng = np.random.default_rng(0)

# %% Two states, one noisy observation: the answer is Bayes' rule
A = np.array([[0.8, 0.2], [0.2, 0.8]])
up = update_states(None, np.log([0.5, 0.5]), np.log(A[0])[None], np.zeros((1, 0, 2, 2)))
print("posterior:", up.s[0, 0].round(4))

# %% Free energy along the sweeps, starting from random beliefs
S, L = 9, 4
B = rng.dirichlet(np.ones(S), size=(2, L - 1, S)).transpose(0, 1, 3, 2)
loglik = np.zeros((L, S))
loglik[0] = np.log(rng.dirichlet(np.ones(S)))
s0 = rng.dirichlet(np.ones(S), size=(2, L))
up = update_states(s0, np.log(np.full(S, 1 / S)), loglik, B, record=True)
print("F per sweep:", np.array(up.history)[:, 0].round(4))

# %% The two ways of writing expected free energy agree
model = build_frozenlake_model()
s = rng.dirichlet(np.ones(18), size=(4, 3))
logC = [m - np.log(np.exp(m).sum(-1, keepdims=True)) for m in (C[:3] for C in model.C)]
print(expected_free_energy(s, model.A, logC)[0] - expected_free_energy_dual(s, model.A, logC)[0])

# %% First decision of an agent that does not know the layout
agent = ActiveInferenceAgent(model, AgentConfig(), rng)
tr = agent.run_episode(FrozenLake(), record=True)
info = tr.diagnostics[0]
print("action marginal:", dict(zip(ACTIONS, info.marginal.round(3))), " precision:", round(info.gamma, 3))
print("path:", tr.positions, "->", tr.reached)

# %% [markdown]
# # Learning what to expect and what to like
#
# Start with flat score likelihood and/or flat preferences and watch the
# Dirichlet counts after each episode.

# %%
import numpy as np

from felab.env import FrozenLake
from felab.harness import DEFAULT_SETTINGS, make_agent

names = ("positive", "negative", "neutral")

# %% Likelihood only: an exploring first episode, no cell visited twice
agent = make_agent("learn-likelihood", "learn-likelihood", DEFAULT_SETTINGS, np.random.default_rng(1))
env = FrozenLake()
for e in range(1, 4):
    env.set_episode(e)
    print(e, agent.run_episode(env).positions)

# %% Preferences only: the first absorbing outcome becomes the favourite
agent = make_agent("learn-preferences", "learn-preferences", DEFAULT_SETTINGS, np.random.default_rng(2))
for e in range(1, 7):
    env.set_episode(e)
    tr = agent.run_episode(env)
    c4 = agent.model.c[1][3]
    print(e, tr.positions, tr.reached, "tau=4 counts:", dict(zip(names, c4)))

# %% Both: after a few episodes the path is direct
agent = make_agent("learn-both", "learn-both", DEFAULT_SETTINGS, np.random.default_rng(3))
for e in range(1, 9):
    env.set_episode(e)
    print(e, agent.run_episode(env).positions)

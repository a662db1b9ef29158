# %% [markdown]
# # Reinforcement-learning comparators

# %%
import numpy as np

from felab.baselines import BayesianRLAgent, QLearningAgent, linear_decay, value_iteration
from felab.env import FrozenLake, LakeConfig

rng = np.random.default_rng(0)
env = FrozenLake(LakeConfig.nonstationary())


def run(agent, episodes=60):
    wins = []
    for e in range(1, episodes + 1):
        env.set_episode(e)
        wins.append(agent.run_episode(env, e).reached == "goal")
    return np.array(wins)


# %% Q-learning, fixed and decaying exploration; the goal moves at episode 21
for name, eps in (("eps=0.1", 0.1), ("decay", linear_decay(60))):
    w = run(QLearningAgent(epsilon=eps, rng=rng))
    print(f"Q {name:8s} before switch {w[:20].mean():.2f}  after {w[20:40].mean():.2f}  late {w[40:].mean():.2f}")

# %% Thompson sampling over a Beta-Bernoulli lake
ag = BayesianRLAgent(rng=rng)
w = run(ag)
print(f"Bayes RL before switch {w[:20].mean():.2f}  after {w[20:40].mean():.2f}  late {w[40:].mean():.2f}")
print("belief the goal sits at 8:", round(ag.model.reward_mean, 3))

# %% Value iteration on a three-cell chain: V(start) = discount
P = np.zeros((3, 1, 3))
P[0, 0, 1] = P[1, 0, 2] = P[2, 0, 2] = 1
Q, sweeps = value_iteration(P, np.array([0, 0, 1.0]), np.array([False, False, True]), 0.9)
print(Q[:, 0], sweeps)

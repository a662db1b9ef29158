# %% [markdown]
# # The lake as a generative model
#
# Eighteen hidden states: nine cells times two layouts of goal and hole.
# The agent sees where it is (almost noiselessly) and a score.

# %%
import numpy as np

from felab.model import ACTIONS, FrozenLakeModelConfig, build_frozenlake_model, preferences_from_rewards

model = build_frozenlake_model()
print("states:", model.states.factors)
print("A shapes:", [A.shape for A in model.A], " B:", model.B.shape)

# %% Where does "right" take us from each cell (first layout)?
right = ACTIONS.index("right")
for loc in range(9):
    j = model.states.to_joint(loc, 0)
    nxt = model.states.from_joint(int(np.argmax(model.B[right][:, j])))[0]
    print(f"{loc + 1} -> {nxt + 1}", end="   ")
print()

# %% Score likelihood: the two layouts disagree only at cells 6 and 8
A = model.A[1]
for loc in (5, 7):
    cols = [model.states.to_joint(loc, k) for k in range(2)]
    print(f"cell {loc + 1}: P(score | layout) =\n{A[:, cols].round(2)}")

# %% Preferences in nats, and the map from raw rewards
print("C[score] =", model.C[1][0])
print(preferences_from_rewards({"G": 100, "H": -100, "F": -10}))

# %% A flat-preference ("null") model
null = build_frozenlake_model(FrozenLakeModelConfig(score_preferences=(0, 0, 0)))
print("null C:", null.C[1][0])

# %% [markdown]
# # The lake itself

# %%
from felab.env import FrozenLake, LakeConfig, apply_schedule, render
from felab.model import ACTIONS

print(render(context=1), end="\n\n")
print(render(context=2))

# %% Walk to the goal in the first layout
env = FrozenLake(LakeConfig(initial_context=1))
for a in ("down", "down", "right"):
    r = env.step(ACTIONS.index(a))
    print(a, r)

# %% Bumping into the edge leaves you in place
env = FrozenLake()
print(env.step(ACTIONS.index("left")).position)

# %% Context over the 500 non-stationary episodes
cfg = LakeConfig.nonstationary()
changes = [e for e in range(2, 501) if apply_schedule(cfg, e) != apply_schedule(cfg, e - 1)]
print("switches:", changes, " final goal:", FrozenLake(cfg, context=apply_schedule(cfg, 500)).goal)

"""Deterministic 3x3 frozen lake with swappable goal and hole."""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import ACTIONS, NEGATIVE, NEUTRAL, POSITIVE, grid_step, transition_table

# cell (1-based) of goal and hole per context
CONTEXT_CELLS = {1: (8, 6), 2: (6, 8)}
NONSTATIONARY_SWITCHES = (21, 121, 141, 251, 451)


class EnvError(RuntimeError):
    pass


@dataclass
class LakeConfig:
    rows: int = 3
    cols: int = 3
    start: int = 1
    initial_context: int = 2  # goal at 6
    switches: tuple = ()  # episodes (1-based) at which goal and hole swap
    horizon: int = 15
    r_goal: float = 100.0
    r_hole: float = 0.0
    r_frozen: float = 0.0
    score_on_goal: float = 100.0

    def __post_init__(self):
        if self.initial_context not in CONTEXT_CELLS:
            raise EnvError(f"context must be 1 or 2, got {self.initial_context}")
        sw = list(self.switches)
        if any(b <= a for a, b in zip(sw, sw[1:])):
            raise EnvError("switch episodes must be strictly increasing")
        self.switches = tuple(int(e) for e in sw)

    @classmethod
    def stationary(cls, **kw):
        return cls(**kw)

    @classmethod
    def nonstationary(cls, **kw):
        kw.setdefault("switches", NONSTATIONARY_SWITCHES)
        return cls(**kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "rewards" in d:
            r = d.pop("rewards")
            d.update(r_goal=r.get("G", 100.0), r_hole=r.get("H", 0.0), r_frozen=r.get("F", 0.0))
        if "switches" in d:
            d["switches"] = tuple(d["switches"])
        return cls(**d)

    def to_dict(self):
        return {
            "rows": self.rows, "cols": self.cols, "start": self.start,
            "initial_context": self.initial_context, "switches": list(self.switches),
            "horizon": self.horizon, "r_goal": self.r_goal, "r_hole": self.r_hole,
            "r_frozen": self.r_frozen, "score_on_goal": self.score_on_goal,
        }


def apply_schedule(config: LakeConfig, episode):
    """Context active in a (1-based) episode."""
    flips = sum(1 for e in config.switches if episode >= e)
    ctx = config.initial_context
    return ctx if flips % 2 == 0 else 3 - ctx


@dataclass
class StepResult:
    position: int  # 1-based
    outcome: tuple  # (position index, score category)
    reward: float
    terminal: bool
    moves: int


@dataclass
class AgentTrace:
    """What happened in one episode, independent of the agent type."""

    context: int
    positions: list = field(default_factory=list)  # 1-based, including start
    actions: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)  # (position index, score)
    rewards: list = field(default_factory=list)
    reached: str = "none"  # "goal", "hole" or "none"
    diagnostics: list = field(default_factory=list)

    @property
    def moves(self):
        return len(self.actions)


class FrozenLake:
    def __init__(self, config: LakeConfig | None = None, context=None):
        self.config = config or LakeConfig()
        self.context = self.config.initial_context if context is None else context
        self.reset()

    @property
    def goal(self):
        return CONTEXT_CELLS[self.context][0]

    @property
    def hole(self):
        return CONTEXT_CELLS[self.context][1]

    def set_episode(self, episode):
        self.context = apply_schedule(self.config, episode)
        return self.reset()

    def reset(self):
        self.position = self.config.start
        self.moves = 0
        self.done = False
        return self._outcome()

    def _score(self):
        if self.position == self.goal:
            return POSITIVE
        if self.position == self.hole:
            return NEGATIVE
        return NEUTRAL

    def _outcome(self):
        return (self.position - 1, self._score())

    def step(self, action):
        if self.done:
            raise EnvError("step called on a terminated episode")
        if not 0 <= action < len(ACTIONS):
            raise EnvError(f"invalid action {action}")
        c = self.config
        self.position = grid_step(self.position - 1, action, c.rows, c.cols) + 1
        self.moves += 1
        score = self._score()
        if score == POSITIVE:
            reward = c.r_goal
        elif score == NEGATIVE:
            reward = c.r_hole
        else:
            reward = c.r_frozen
        self.done = score != NEUTRAL or self.moves >= c.horizon
        return StepResult(self.position, self._outcome(), reward, self.done, self.moves)

    def transition_table(self):
        """Next 0-based cell for each (action, cell); absorbing cells stay put."""
        c = self.config
        return transition_table(c.rows, c.cols, (self.goal - 1, self.hole - 1))


def episode_score(trace: AgentTrace, score_on_goal=100.0):
    return score_on_goal if trace.reached == "goal" else 0.0


def render(config: LakeConfig | None = None, context=None):
    """ASCII grid with S/F/H/G letters."""
    config = config or LakeConfig()
    context = config.initial_context if context is None else context
    goal, hole = CONTEXT_CELLS[context]
    rows = []
    for r in range(config.rows):
        cells = []
        for col in range(config.cols):
            k = r * config.cols + col + 1
            cells.append("G" if k == goal else "H" if k == hole else "S" if k == config.start else "F")
        rows.append(" ".join(cells))
    return "\n".join(rows)

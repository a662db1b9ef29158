"""Discrete active inference on a frozen lake, with RL comparators."""

__version__ = "0.1.0"

from .agent import ActiveInferenceAgent, AgentConfig
from .env import FrozenLake, LakeConfig
from .model import FrozenLakeModelConfig, GenerativeModel, build_frozenlake_model

__all__ = [
    "ActiveInferenceAgent", "AgentConfig", "FrozenLake", "LakeConfig",
    "FrozenLakeModelConfig", "GenerativeModel", "build_frozenlake_model",
]

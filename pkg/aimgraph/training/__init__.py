"""TD3 training of the graph policy."""

from aimgraph.training.env import EnvStep, ExternalActionController, TrainingEnv
from aimgraph.training.optim import Adam, soft_update
from aimgraph.training.replay import ReplayBuffer, Transition, match_vertices
from aimgraph.training.reward import RewardSpec, compute_reward
from aimgraph.training.td3 import (
    LOG_COLUMNS,
    LogRow,
    TD3Trainer,
    TrainingDivergedError,
    TrainingLog,
    TrainingResult,
    critic_target,
    td3_train,
)

__all__ = [
    "LOG_COLUMNS",
    "Adam",
    "EnvStep",
    "ExternalActionController",
    "LogRow",
    "ReplayBuffer",
    "RewardSpec",
    "TD3Trainer",
    "TrainingDivergedError",
    "TrainingEnv",
    "TrainingLog",
    "TrainingResult",
    "Transition",
    "compute_reward",
    "critic_target",
    "match_vertices",
    "soft_update",
    "td3_train",
]

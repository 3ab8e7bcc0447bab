from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from aimgraph.core.types import KinematicLimits, TrainingSettings
from aimgraph.dynamics.world import World


@dataclass(frozen=True)
class RewardSpec:
    w_flow: float = 1.0
    w_act: float = 0.1
    w_coll: float = 10.0
    terminal_on_collision: bool = True

    def __post_init__(self) -> None:
        if min(self.w_flow, self.w_act, self.w_coll) < 0:
            raise ValueError("Reward weights must be non-negative")

    @classmethod
    def from_settings(cls, settings: TrainingSettings) -> "RewardSpec":
        return cls(
            w_flow=settings.w_flow,
            w_act=settings.w_act,
            w_coll=settings.w_coll,
            terminal_on_collision=settings.terminal_on_collision,
        )


def compute_reward(
    world: World,
    actions: Mapping[int, float],
    collision: bool,
    v0: float,
    spec: RewardSpec = RewardSpec(),
    limits: KinematicLimits = KinematicLimits(),
) -> float:
    """Joint reward of the controlled vehicles.

    ``w_flow * mean(v / v0) - w_act * mean((a / a_max)^2) - w_coll * [collision]``
    with speeds taken from ``world``, the state the actions were chosen in.
    """
    if not actions:
        raise ValueError("compute_reward needs at least one controlled vehicle")
    ids = sorted(actions)
    speeds = np.array([world.vehicle(vehicle_id).v for vehicle_id in ids])  # type: ignore[union-attr]
    accels = np.array([actions[vehicle_id] for vehicle_id in ids], dtype=float)
    reward = spec.w_flow * float(np.mean(speeds / v0))
    reward -= spec.w_act * float(np.mean((accels / limits.a_max) ** 2))
    if collision:
        reward -= spec.w_coll
    return reward

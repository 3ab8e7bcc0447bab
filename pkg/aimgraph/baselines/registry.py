from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from aimgraph.baselines.base import Controller
from aimgraph.baselines.fifo import EnhancedFifoController, FifoController
from aimgraph.baselines.priority import PriorityRuleController
from aimgraph.baselines.signals import SignalController

if TYPE_CHECKING:
    from aimgraph.config.loader import ExperimentConfig
    from aimgraph.policy.weights import PolicyWeights

BASELINE_KINDS = ("tl", "fifo", "efifo", "pr")


def build_controller(
    kind: str,
    config: "ExperimentConfig",
    weights: Optional["PolicyWeights"] = None,
) -> Controller:
    kind = kind.lower()
    shared = dict(params=config.car_following, limits=config.limits, control=config.control)
    if kind == "tl":
        return SignalController(timing=config.signals, **shared)
    if kind == "fifo":
        return FifoController(**shared)
    if kind == "efifo":
        return EnhancedFifoController(**shared)
    if kind == "pr":
        return PriorityRuleController(**shared)
    if kind == "rl":
        if weights is None:
            raise RuntimeError("Controller kind rl requires policy weights")
        from aimgraph.policy.controller import PolicyController

        return PolicyController(weights, config)
    raise RuntimeError(f"Unknown controller kind: {kind}")

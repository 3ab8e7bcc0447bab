"""Non-learned intersection controllers."""

from aimgraph.baselines.base import Controller, RuleBasedController, time_to_cover, time_to_reach
from aimgraph.baselines.fifo import EnhancedFifoController, FifoController, efifo_control, fifo_control
from aimgraph.baselines.priority import PriorityRuleController, accepts_gap, pr_control, priority_rank
from aimgraph.baselines.registry import BASELINE_KINDS, build_controller
from aimgraph.baselines.reservation import ReservationLedger
from aimgraph.baselines.signals import (
    Phase,
    SignalColor,
    SignalController,
    SignalMemory,
    SignalPlan,
    build_signal_plan,
    signal_state,
    tl_control,
    yellow_should_stop,
)

__all__ = [
    "BASELINE_KINDS",
    "Controller",
    "EnhancedFifoController",
    "FifoController",
    "Phase",
    "PriorityRuleController",
    "ReservationLedger",
    "RuleBasedController",
    "SignalColor",
    "SignalController",
    "SignalMemory",
    "SignalPlan",
    "accepts_gap",
    "build_controller",
    "build_signal_plan",
    "efifo_control",
    "fifo_control",
    "pr_control",
    "priority_rank",
    "signal_state",
    "time_to_cover",
    "time_to_reach",
    "tl_control",
    "yellow_should_stop",
]

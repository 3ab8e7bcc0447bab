"""Traffic generation, episode execution, metrics and evaluation protocols."""

from aimgraph.harness.metrics import (
    MetricsRecord,
    VehicleRecord,
    duration_of,
    flow_bins,
    quartiles,
    stopped,
    summarize,
)
from aimgraph.harness.protocols import (
    BaselineResult,
    CrossvalResult,
    SimulationResult,
    baseline_protocol,
    crossval_protocol,
    protocol_scenarios,
)
from aimgraph.harness.runner import EpisodeJob, EpisodeRunner
from aimgraph.harness.simulation import (
    SafetyViolation,
    Simulation,
    StepResult,
    ensure_safe,
    run_episode,
)
from aimgraph.harness.traffic import TrafficGenerator, lane_rate, spawn_stream

__all__ = [
    "BaselineResult",
    "CrossvalResult",
    "EpisodeJob",
    "EpisodeRunner",
    "MetricsRecord",
    "SafetyViolation",
    "Simulation",
    "SimulationResult",
    "StepResult",
    "TrafficGenerator",
    "VehicleRecord",
    "baseline_protocol",
    "crossval_protocol",
    "duration_of",
    "ensure_safe",
    "flow_bins",
    "lane_rate",
    "protocol_scenarios",
    "quartiles",
    "run_episode",
    "spawn_stream",
    "stopped",
    "summarize",
]

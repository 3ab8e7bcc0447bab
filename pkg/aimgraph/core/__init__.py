"""Core data structures and types."""

from aimgraph.core.events import EpisodeLog
from aimgraph.core.rng import derive_rng, derive_seed
from aimgraph.core.types import (
    CONTROLLER_KINDS,
    LAYOUT_KINDS,
    ControlSettings,
    EpisodeEvent,
    GraphSettings,
    KinematicLimits,
    NetworkSettings,
    ProtocolSettings,
    RunConfig,
    ScenarioConfig,
    SignalTiming,
    TrafficSettings,
    TrainingSettings,
    VehicleGeometry,
)

__all__ = [
    "CONTROLLER_KINDS",
    "LAYOUT_KINDS",
    "ControlSettings",
    "EpisodeEvent",
    "EpisodeLog",
    "GraphSettings",
    "KinematicLimits",
    "NetworkSettings",
    "ProtocolSettings",
    "RunConfig",
    "ScenarioConfig",
    "SignalTiming",
    "TrafficSettings",
    "TrainingSettings",
    "VehicleGeometry",
    "derive_rng",
    "derive_seed",
]

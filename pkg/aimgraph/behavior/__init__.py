"""Car-following models and leader resolution."""

from aimgraph.behavior.car_following import (
    CfParams,
    CfVariant,
    DriveOffContext,
    LeaderSource,
    LeaderView,
    desired_gap,
    eidm_accel,
    equilibrium_gap,
    idm_accel,
)
from aimgraph.behavior.driver import CarFollowingDriver, DriveOffTracker
from aimgraph.behavior.leaders import (
    Leader,
    braking_distance,
    distance_to_halt,
    find_leader,
    projected_position,
    resolve_leader,
)

__all__ = [
    "CarFollowingDriver",
    "CfParams",
    "CfVariant",
    "DriveOffContext",
    "DriveOffTracker",
    "Leader",
    "LeaderSource",
    "LeaderView",
    "braking_distance",
    "desired_gap",
    "distance_to_halt",
    "eidm_accel",
    "equilibrium_gap",
    "find_leader",
    "idm_accel",
    "projected_position",
    "resolve_leader",
]

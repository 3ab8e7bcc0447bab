"""Longitudinal vehicle motion, world snapshots and collision checks."""

from aimgraph.dynamics.collisions import check_collisions, footprints_overlap, vehicle_polygon
from aimgraph.dynamics.kinematics import VehicleState, step_vehicle
from aimgraph.dynamics.world import World

__all__ = [
    "VehicleState",
    "World",
    "check_collisions",
    "footprints_overlap",
    "step_vehicle",
    "vehicle_polygon",
]

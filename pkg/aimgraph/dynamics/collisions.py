from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable, Set, Tuple

from shapely.geometry import Polygon

from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.geometry.segments import Pose


def vehicle_polygon(pose: Pose, length: float, width: float) -> Polygon:
    """Oriented footprint rectangle centred at ``pose``."""
    cos_h, sin_h = math.cos(pose.heading), math.sin(pose.heading)
    half_l, half_w = 0.5 * length, 0.5 * width
    corners = []
    for lon, lat in ((half_l, half_w), (-half_l, half_w), (-half_l, -half_w), (half_l, -half_w)):
        corners.append(
            (pose.x + lon * cos_h - lat * sin_h, pose.y + lon * sin_h + lat * cos_h)
        )
    return Polygon(corners)


def footprints_overlap(
    pose_a: Pose, size_a: Tuple[float, float], pose_b: Pose, size_b: Tuple[float, float]
) -> bool:
    reach = math.hypot(*size_a) / 2.0 + math.hypot(*size_b) / 2.0
    if math.hypot(pose_a.x - pose_b.x, pose_a.y - pose_b.y) > reach:
        return False
    poly_a = vehicle_polygon(pose_a, *size_a)
    poly_b = vehicle_polygon(pose_b, *size_b)
    return poly_a.intersects(poly_b) and not poly_a.touches(poly_b)


def check_collisions(
    states: Iterable[VehicleState], layout: IntersectionLayout
) -> Set[Tuple[int, int]]:
    """Id pairs (lower id first) whose footprints overlap with positive area."""
    placed = [
        (state, layout.route(state.route_id).pose_at(state.s))
        for state in sorted(states, key=lambda item: item.id)
    ]
    pairs: Set[Tuple[int, int]] = set()
    for (state_a, pose_a), (state_b, pose_b) in combinations(placed, 2):
        if footprints_overlap(
            pose_a, (state_a.length, state_a.width), pose_b, (state_b.length, state_b.width)
        ):
            pairs.add((state_a.id, state_b.id))
    return pairs

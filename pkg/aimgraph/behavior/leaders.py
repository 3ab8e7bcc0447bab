from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from aimgraph.behavior.car_following import LeaderSource, LeaderView
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.conflicts import ConflictKind
from aimgraph.geometry.routes import Route


@dataclass(frozen=True)
class Leader:
    state: VehicleState
    gap: float


def projected_position(ego_route: Route, other: VehicleState, world: World) -> Optional[float]:
    """Centre of ``other`` expressed as arc length on ``ego_route``, if it shares a lane with it."""
    if other.route_id == ego_route.id:
        return other.s
    other_route = world.layout.route(other.route_id)
    relation = world.layout.conflict(ego_route.id, other_route.id)
    if relation is not None and relation.kind is ConflictKind.SAME_LANE_PREFIX:
        if other.rear < relation.interval_b.end:
            return other.s
    if other_route.exit_lane == ego_route.exit_lane:
        along_exit = other.s - other_route.box_exit_s
        if along_exit + 0.5 * other.length > 0.0:
            return ego_route.box_exit_s + along_exit
    return None


def find_leader(ego: VehicleState, world: World) -> Optional[Leader]:
    """Nearest vehicle ahead of ``ego`` on a lane its route shares."""
    route = world.route_of(ego)
    best: Optional[Leader] = None
    for other in world.vehicles:
        if other.id == ego.id:
            continue
        position = projected_position(route, other, world)
        if position is None or position <= ego.s:
            continue
        gap = position - ego.s - 0.5 * (other.length + ego.length)
        if best is None or gap < best.gap:
            best = Leader(state=other, gap=gap)
    return best


def resolve_leader(
    ego: VehicleState,
    world: World,
    right_of_way: bool,
    halt_s: Optional[float] = None,
    source: LeaderSource = LeaderSource.HALT_POINT,
) -> LeaderView:
    """Leader the car-following model should react to.

    A yielding vehicle sees a stationary virtual leader at its halt point
    (``halt_s``, default the end of its approach lane) unless a real leader
    is already closer. Halt points behind the front bumper are ignored.
    """
    leader = find_leader(ego, world)
    if not right_of_way:
        halt = world.route_of(ego).halt_s if halt_s is None else halt_s
        distance = halt - ego.front
        if distance >= 0.0 and (leader is None or leader.gap > distance):
            return LeaderView(gap=distance, speed=0.0, source=source)
    if leader is None:
        return LeaderView.free_road()
    return LeaderView(
        gap=max(leader.gap, 0.0),
        speed=leader.state.v,
        source=LeaderSource.VEHICLE,
        vehicle_id=leader.state.id,
    )


def distance_to_halt(ego: VehicleState, route: Route) -> float:
    return route.halt_s - ego.front


def braking_distance(v: float, decel: float) -> float:
    return v * v / (2.0 * decel) if decel > 0 else math.inf

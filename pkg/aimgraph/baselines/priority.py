from __future__ import annotations

from typing import Dict, Optional

from aimgraph.baselines.base import (
    RuleBasedController,
    drive,
    past_halt,
    time_to_cover,
    time_to_reach,
)
from aimgraph.baselines.reservation import ReservationLedger
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.behavior.leaders import braking_distance, distance_to_halt
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import ControlSettings
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.geometry.routes import PriorityClass, Route, TurnType


def priority_rank(route: Route) -> int:
    """0 main through/right, 1 main left, 2 side through/right, 3 side left."""
    rank = 0 if route.priority is PriorityClass.MAIN else 2
    return rank + (1 if route.turn is TurnType.LEFT else 0)


def accepts_gap(
    ego: VehicleState,
    other: VehicleState,
    world: World,
    driver: CarFollowingDriver,
    control: ControlSettings,
) -> bool:
    """Whether ``ego`` can clear its conflict with ``other`` before ``other`` arrives."""
    relation = world.layout.crossing(ego.route_id, other.route_id)
    if relation is None:
        return True
    if other.front >= relation.interval_b.begin:
        return False
    arrival = time_to_reach(relation.interval_b.begin - other.front, other.v)
    clear_distance = relation.interval_a.end + control.clearance_margin + 0.5 * ego.length - ego.s
    params = driver.params
    clear_time = time_to_cover(clear_distance, ego.v, params.max_accel, params.v0)
    return arrival > clear_time + control.gap_margin


def pr_control(
    world: World,
    ledger: ReservationLedger,
    driver: CarFollowingDriver,
    control: ControlSettings = ControlSettings(),
    log: Optional[EpisodeLog] = None,
) -> Dict[int, float]:
    """Static priority rules: side road and left turns give way.

    A vehicle waits at its halt point while a committed crossing vehicle is
    still inside the conflict, while a crossing vehicle of the same rank is
    nearer, or while some higher-ranked crossing vehicle leaves too small a
    gap. Committed vehicles are recorded as grants in ``ledger``.
    """
    ledger.release_cleared(world)
    layout = world.layout
    accelerations: Dict[int, float] = {}
    for state in world.vehicles:
        route = world.route_of(state)
        if not route.in_control_zone(state.s) or ledger.is_granted(state.id):
            accelerations[state.id] = drive(driver, state, world, True)
            continue
        ledger.stamp(state, world.time)
        if past_halt(state, route):
            ledger.grant(state, world.time)
            if log is not None:
                log.record("forced_grant", state.id, route=state.route_id)
            accelerations[state.id] = drive(driver, state, world, True)
            continue

        rank = priority_rank(route)
        own_distance = distance_to_halt(state, route)
        may_go = True
        for other in world.vehicles:
            if other.id == state.id or not layout.crossing(state.route_id, other.route_id):
                continue
            if ledger.cleared(other, state.route_id):
                continue
            if ledger.is_granted(other.id):
                may_go = False
            else:
                other_route = world.route_of(other)
                other_rank = priority_rank(other_route)
                if other_rank < rank:
                    may_go = accepts_gap(state, other, world, driver, control)
                elif other_rank == rank and other_route.in_control_zone(other.s):
                    may_go = (distance_to_halt(other, other_route), other.id) > (own_distance, state.id)
            if not may_go:
                break

        if may_go:
            commit_distance = braking_distance(state.v, driver.params.comfortable_decel) + control.commit_margin
            if own_distance <= commit_distance:
                ledger.grant(state, world.time)
        accelerations[state.id] = drive(driver, state, world, may_go)
    return accelerations


class PriorityRuleController(RuleBasedController):
    name = "pr"

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        super().reset(layout, log)
        self.ledger = ReservationLedger(layout, self.control.clearance_margin)

    def accelerations(self, world: World) -> Dict[int, float]:
        return pr_control(world, self.ledger, self.driver, self.control, self.log)

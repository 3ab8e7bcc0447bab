from __future__ import annotations

from typing import Dict, List, Optional, Set, Tuple

from aimgraph.baselines.base import RuleBasedController, drive, past_halt
from aimgraph.baselines.reservation import ReservationLedger
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.behavior.leaders import braking_distance, distance_to_halt
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import ControlSettings
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout


def fifo_control(
    world: World,
    ledger: ReservationLedger,
    driver: CarFollowingDriver,
    log: Optional[EpisodeLog] = None,
) -> Dict[int, float]:
    """Strict first-in-first-out reservation over the whole intersection.

    A vehicle is granted passage once every earlier arrival whose route
    crosses its own has cleared the shared conflict interval. Ungranted
    vehicles hold at their halt point.
    """
    controlled = _controlled(world, ledger)
    for state in sorted(controlled, key=lambda item: ledger.arrival(item.id)):
        if ledger.is_granted(state.id):
            continue
        if _overshot(state, world, ledger, log):
            continue
        stamp = ledger.arrival(state.id)
        blocked = any(
            ledger.arrival(other.id) < stamp and not ledger.cleared(other, state.route_id)
            for other in controlled
            if other.id != state.id and world.layout.crossing(state.route_id, other.route_id)
        )
        if not blocked:
            ledger.grant(state, world.time)
    return _accelerations(world, ledger, driver, set())


def efifo_control(
    world: World,
    ledger: ReservationLedger,
    driver: CarFollowingDriver,
    control: ControlSettings = ControlSettings(),
    log: Optional[EpisodeLog] = None,
) -> Dict[int, float]:
    """Conflict-local ordering by distance to the intersection.

    Only the front-most ungranted vehicle of each approach lane competes.
    It may go when no granted vehicle still occupies a crossing interval of
    its route and no ungranted crossing vehicle is nearer (ties: earlier
    arrival, then lower id). Grants are committed once the vehicle could no
    longer stop comfortably before the halt point.
    """
    controlled = _controlled(world, ledger)
    layout = world.layout
    for state in controlled:
        if not ledger.is_granted(state.id):
            _overshot(state, world, ledger, log)
    waiting = [state for state in controlled if not ledger.is_granted(state.id)]
    if not waiting:
        ledger.last_grant_time = world.time
        return _accelerations(world, ledger, driver, set())

    def key(state: VehicleState) -> Tuple[float, Tuple[float, int], int]:
        return (distance_to_halt(state, world.route_of(state)), ledger.arrival(state.id), state.id)

    heads: Dict[str, VehicleState] = {}
    for state in waiting:
        lane = world.route_of(state).approach_lane
        if lane not in heads or state.s > heads[lane].s:
            heads[lane] = state

    proceeding: Set[int] = set()
    for head in sorted(heads.values(), key=key):
        held = any(
            ledger.holds(other.id, head.route_id)
            for other in controlled
            if ledger.is_granted(other.id) and other.route_id != head.route_id
        )
        if held:
            continue
        head_key = key(head)
        if any(
            key(other) < head_key
            for other in waiting
            if other.id != head.id and layout.crossing(head.route_id, other.route_id)
        ):
            continue
        proceeding.add(head.id)
        commit_distance = braking_distance(head.v, driver.params.comfortable_decel) + control.commit_margin
        if distance_to_halt(head, world.route_of(head)) <= commit_distance:
            ledger.grant(head, world.time)

    if (
        not proceeding
        and not ledger.any_held()
        and world.time - ledger.last_grant_time > control.stall_timeout
    ):
        chosen = min(heads.values(), key=lambda state: ledger.arrival(state.id))
        ledger.grant(chosen, world.time)
        if log is not None:
            log.record("deadlock_break", chosen.id, waiting=len(waiting))
    return _accelerations(world, ledger, driver, proceeding)


class FifoController(RuleBasedController):
    name = "fifo"

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        super().reset(layout, log)
        self.ledger = ReservationLedger(layout, self.control.clearance_margin)

    def accelerations(self, world: World) -> Dict[int, float]:
        return fifo_control(world, self.ledger, self.driver, self.log)


class EnhancedFifoController(RuleBasedController):
    name = "efifo"

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        super().reset(layout, log)
        self.ledger = ReservationLedger(layout, self.control.clearance_margin)

    def accelerations(self, world: World) -> Dict[int, float]:
        return efifo_control(world, self.ledger, self.driver, self.control, self.log)


def _controlled(world: World, ledger: ReservationLedger) -> List[VehicleState]:
    ledger.release_cleared(world)
    controlled = list(world.in_control_zone())
    for state in controlled:
        ledger.stamp(state, world.time)
    return controlled


def _overshot(
    state: VehicleState, world: World, ledger: ReservationLedger, log: Optional[EpisodeLog]
) -> bool:
    if not past_halt(state, world.route_of(state)):
        return False
    ledger.grant(state, world.time)
    if log is not None:
        log.record("forced_grant", state.id, route=state.route_id)
    return True


def _accelerations(
    world: World, ledger: ReservationLedger, driver: CarFollowingDriver, proceeding: Set[int]
) -> Dict[int, float]:
    accelerations: Dict[int, float] = {}
    for state in world.vehicles:
        route = world.route_of(state)
        right_of_way = (
            not route.in_control_zone(state.s)
            or ledger.is_granted(state.id)
            or state.id in proceeding
        )
        accelerations[state.id] = drive(driver, state, world, right_of_way)
    return accelerations

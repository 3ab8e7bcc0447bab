from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Set, Tuple

from aimgraph.baselines.base import RuleBasedController, drive, past_halt, time_to_cover, time_to_reach
from aimgraph.behavior.car_following import LeaderSource
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import ControlSettings, SignalTiming
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.conflicts import ConflictRelation
from aimgraph.geometry.layouts import IntersectionLayout, LayoutError
from aimgraph.geometry.routes import Route, TurnType

GROUP_ORDER: Tuple[str, ...] = ("main", "main_left", "side", "side_left")


class SignalColor(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


@dataclass(frozen=True)
class Phase:
    group: str
    green: float
    yellow: float

    @property
    def duration(self) -> float:
        return self.green + self.yellow


@dataclass(frozen=True)
class SignalPlan:
    """Fixed-time plan: one group at a time is green then yellow, no all-red."""

    phases: Tuple[Phase, ...]
    lanes: Mapping[str, Tuple[str, ...]]

    @property
    def cycle_length(self) -> float:
        return sum(phase.duration for phase in self.phases)

    def group_of(self, lane_id: str) -> str:
        for group, lanes in self.lanes.items():
            if lane_id in lanes:
                return group
        raise KeyError(f"lane {lane_id!r} is not signalised")


def build_signal_plan(layout: IntersectionLayout, timing: SignalTiming = SignalTiming()) -> SignalPlan:
    grouped: Dict[str, List[str]] = {}
    for lane_id, group in layout.signal_groups.items():
        grouped.setdefault(group, []).append(lane_id)
    unknown = set(grouped) - set(GROUP_ORDER)
    if unknown:
        raise LayoutError(f"unknown signal groups {sorted(unknown)} in layout {layout.kind}")
    if not grouped:
        raise LayoutError(f"layout {layout.kind} has no signalised lanes")
    phases = tuple(
        Phase(
            group=group,
            green=timing.main_green if group == "main" else timing.side_green,
            yellow=timing.yellow,
        )
        for group in GROUP_ORDER
        if group in grouped
    )
    return SignalPlan(phases=phases, lanes={group: tuple(lanes) for group, lanes in grouped.items()})


def group_state(plan: SignalPlan, t: float, group: str) -> SignalColor:
    phase_time = math.fmod(t, plan.cycle_length)
    start = 0.0
    for phase in plan.phases:
        if phase.group == group:
            if start <= phase_time < start + phase.green:
                return SignalColor.GREEN
            if start + phase.green <= phase_time < start + phase.duration:
                return SignalColor.YELLOW
            return SignalColor.RED
        start += phase.duration
    raise KeyError(f"signal group {group!r} not in plan")


def signal_state(plan: SignalPlan, t: float, lane: str) -> SignalColor:
    if t < 0:
        raise ValueError("signal time must be non-negative")
    return group_state(plan, t, plan.group_of(lane))


def cycle_index(plan: SignalPlan, t: float) -> int:
    return int(t // plan.cycle_length)


@dataclass
class SignalMemory:
    """Yellow-phase stop/go decisions keyed by (vehicle id, cycle index)."""

    stops: Dict[Tuple[int, int], bool] = field(default_factory=dict)

    def forget_missing(self, world: World) -> None:
        for key in [key for key in self.stops if world.vehicle(key[0]) is None]:
            del self.stops[key]


def yellow_should_stop(state: VehicleState, route: Route, comfortable_decel: float) -> bool:
    """Stop iff the deceleration needed to halt at the stop line is comfortable."""
    distance = route.halt_s - state.front
    if distance <= 0.0:
        return False
    return state.v * state.v / (2.0 * distance) <= comfortable_decel


def tl_control(
    world: World,
    plan: SignalPlan,
    driver: CarFollowingDriver,
    memory: SignalMemory,
    control: ControlSettings = ControlSettings(),
    log: Optional[EpisodeLog] = None,
) -> Dict[int, float]:
    """Fixed-time signal control with permissive left turns.

    Red holds vehicles at the stop line, yellow holds those that can stop
    comfortably. On green a vehicle still yields to crossing vehicles inside
    the box that have not cleared. A left-turner sharing its phase with
    oncoming traffic waits inside the box for an acceptable gap and leaves
    once its phase ends. Protected left turns whose paths cross go one at a
    time.
    """
    memory.forget_missing(world)
    layout = world.layout
    t = world.time
    cycle = cycle_index(plan, t)
    decisions: Dict[int, Tuple[bool, Optional[float], LeaderSource]] = {}
    yielding_lefts: Set[int] = set()

    def committed(state: VehicleState) -> bool:
        return past_halt(state, world.route_of(state)) or memory.stops.get((state.id, cycle)) is False

    def left_wait(state: VehicleState, route: Route) -> Optional[float]:
        """In-box waiting point if the left-turner must currently give way."""
        if route.turn is not TurnType.LEFT:
            return None
        opposing = _opposing_relations(layout, plan, route)
        if not opposing:
            return None
        wait_s = min(relation.interval_a.begin for relation in opposing.values())
        if state.front > wait_s:
            return None
        green = group_state(plan, t, plan.group_of(route.approach_lane)) is SignalColor.GREEN
        for other in world.vehicles:
            relation = opposing.get(other.route_id)
            if relation is None or _has_cleared(other, relation.swapped(), control):
                continue
            if green and not _left_gap_ok(state, other, relation, driver, control):
                return wait_s
            if not green and committed(other):
                return wait_s
        return None

    controlled = [state for state in world.vehicles if world.route_of(state).in_control_zone(state.s)]
    for state in controlled:
        route = world.route_of(state)
        if not past_halt(state, route):
            if signal_state(plan, t, route.approach_lane) is SignalColor.YELLOW:
                memory.stops.setdefault(
                    (state.id, cycle),
                    yellow_should_stop(state, route, driver.params.comfortable_decel),
                )
            continue
        wait_s = left_wait(state, route)
        if wait_s is not None:
            yielding_lefts.add(state.id)
            decisions[state.id] = (False, wait_s, LeaderSource.HALT_POINT)
        else:
            decisions[state.id] = (True, None, LeaderSource.NONE)

    for state in controlled:
        if state.id in decisions:
            continue
        route = world.route_of(state)
        color = signal_state(plan, t, route.approach_lane)
        if color is SignalColor.RED:
            decisions[state.id] = (False, None, LeaderSource.STOP_LINE)
            continue
        if color is SignalColor.YELLOW and memory.stops[(state.id, cycle)]:
            decisions[state.id] = (False, None, LeaderSource.STOP_LINE)
            continue
        if color is SignalColor.GREEN or route.turn is TurnType.LEFT:
            group = plan.group_of(route.approach_lane)
            if _box_occupied(state, route, group, world, plan, yielding_lefts, control) or _yields_to_left_partner(
                state, route, world, plan, memory, cycle
            ):
                decisions[state.id] = (False, None, LeaderSource.HALT_POINT)
                continue
        wait_s = left_wait(state, route)
        if wait_s is not None:
            decisions[state.id] = (False, wait_s, LeaderSource.HALT_POINT)
        else:
            decisions[state.id] = (True, None, LeaderSource.NONE)

    accelerations: Dict[int, float] = {}
    for state in world.vehicles:
        right_of_way, halt_s, source = decisions.get(state.id, (True, None, LeaderSource.NONE))
        accelerations[state.id] = drive(driver, state, world, right_of_way, halt_s, source)
    return accelerations


class SignalController(RuleBasedController):
    name = "tl"

    def __init__(self, *args, timing: SignalTiming = SignalTiming(), **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.timing = timing

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        super().reset(layout, log)
        self.plan = build_signal_plan(layout, self.timing)
        self.memory = SignalMemory()

    def accelerations(self, world: World) -> Dict[int, float]:
        return tl_control(world, self.plan, self.driver, self.memory, self.control, self.log)


def _opposing_relations(
    layout: IntersectionLayout, plan: SignalPlan, route: Route
) -> Dict[str, ConflictRelation]:
    """Crossing relations with non-left routes released in the same phase."""
    group = plan.group_of(route.approach_lane)
    relations: Dict[str, ConflictRelation] = {}
    for partner_id in layout.crossing_partners(route.id):
        partner = layout.route(partner_id)
        if partner.turn is TurnType.LEFT:
            continue
        if plan.group_of(partner.approach_lane) != group:
            continue
        relation = layout.crossing(route.id, partner_id)
        if relation is not None:
            relations[partner_id] = relation
    return relations


def _yields_to_left_partner(
    ego: VehicleState,
    route: Route,
    world: World,
    plan: SignalPlan,
    memory: SignalMemory,
    cycle: int,
) -> bool:
    """Crossing left turns released together enter one at a time, earliest arrival first."""
    if route.turn is not TurnType.LEFT:
        return False
    layout = world.layout
    group = plan.group_of(route.approach_lane)
    for other in world.vehicles:
        if other.id == ego.id:
            continue
        other_route = world.route_of(other)
        if other_route.turn is not TurnType.LEFT or plan.group_of(other_route.approach_lane) != group:
            continue
        if past_halt(other, other_route) or not other_route.in_control_zone(other.s):
            continue
        if memory.stops.get((other.id, cycle)):
            continue
        relation = layout.crossing(route.id, other_route.id)
        if relation is None:
            continue
        ego_key = (time_to_reach(relation.interval_a.begin - ego.front, ego.v), ego.id)
        other_key = (time_to_reach(relation.interval_b.begin - other.front, other.v), other.id)
        if other_key < ego_key:
            return True
    return False


def _has_cleared(state: VehicleState, relation: ConflictRelation, control: ControlSettings) -> bool:
    return state.rear > relation.interval_a.end + control.clearance_margin


def _left_gap_ok(
    ego: VehicleState,
    other: VehicleState,
    relation: ConflictRelation,
    driver: CarFollowingDriver,
    control: ControlSettings,
) -> bool:
    if other.front >= relation.interval_b.begin:
        return False
    arrival = time_to_reach(relation.interval_b.begin - other.front, other.v)
    clear_distance = relation.interval_a.end + control.clearance_margin + 0.5 * ego.length - ego.s
    params = driver.params
    return arrival > time_to_cover(clear_distance, ego.v, params.max_accel, params.v0) + control.gap_margin


def _box_occupied(
    ego: VehicleState,
    route: Route,
    group: str,
    world: World,
    plan: SignalPlan,
    yielding_lefts: Set[int],
    control: ControlSettings,
) -> bool:
    for other in world.vehicles:
        if other.id == ego.id:
            continue
        relation = world.layout.crossing(other.route_id, route.id)
        if relation is None:
            continue
        other_route = world.route_of(other)
        if not past_halt(other, other_route) or _has_cleared(other, relation, control):
            continue
        if other.id in yielding_lefts and plan.group_of(other_route.approach_lane) == group:
            continue
        return True
    return False

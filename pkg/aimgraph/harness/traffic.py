from __future__ import annotations

import logging
import math
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from aimgraph.behavior.car_following import CfParams
from aimgraph.core.events import EpisodeLog
from aimgraph.core.rng import derive_rng
from aimgraph.core.types import TrafficSettings, VehicleGeometry
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.geometry.routes import PriorityClass, Route, TurnType

logger = logging.getLogger(__name__)


def lane_rate(layout: IntersectionLayout, lane_id: str, demand: float) -> float:
    """Arrival rate of one approach lane.

    Main-road lanes that carry a through movement get the full per-lane
    demand, side roads and dedicated turn lanes half of it.
    """
    lane = layout.lanes[lane_id]
    through = any(route.turn is TurnType.THROUGH for route in layout.routes_from(lane_id))
    if lane.priority is PriorityClass.MAIN and through:
        return demand
    return 0.5 * demand


def mean_interarrival(rate: float) -> float:
    return math.inf if rate <= 0.0 else 1.0 / rate


def spawn_stream(lane_id: str, rate: float, seed: int, t_shift: float = 1.0) -> Iterator[float]:
    """Arrival times of a shifted-exponential renewal process.

    Inter-arrival times are ``t_shift + Exp`` with overall mean ``1 / rate``.
    A zero rate yields no arrivals.
    """
    if rate < 0.0:
        raise ValueError(f"Arrival rate must be non-negative, got {rate}")
    if rate == 0.0:
        return
    scale = 1.0 / rate - t_shift
    if scale < 0.0:
        raise ValueError(
            f"Arrival rate {rate} on lane {lane_id} exceeds the maximum 1/t_shift = {1.0 / t_shift}"
        )
    rng = derive_rng(seed, "spawn", lane_id)
    time = 0.0
    while True:
        time += t_shift + (rng.exponential(scale) if scale > 0.0 else 0.0)
        yield time


def choose_route(routes: Tuple[Route, ...], weights: Mapping[str, float], rng: np.random.Generator) -> Route:
    probabilities = np.array([max(float(weights.get(route.turn.value, 0.0)), 0.0) for route in routes])
    total = probabilities.sum()
    if total <= 0.0:
        probabilities = np.full(len(routes), 1.0 / len(routes))
    else:
        probabilities = probabilities / total
    return routes[int(rng.choice(len(routes), p=probabilities))]


class TrafficGenerator:
    """Per-lane arrival streams and spawn placement for one episode."""

    def __init__(
        self,
        layout: IntersectionLayout,
        demand: float,
        seed: int,
        settings: TrafficSettings = TrafficSettings(),
        params: CfParams = CfParams(),
        vehicle: VehicleGeometry = VehicleGeometry(),
        max_vehicles: Optional[int] = None,
    ) -> None:
        self.layout = layout
        self.settings = settings
        self.params = params
        self.vehicle = vehicle
        self.max_vehicles = max_vehicles
        self.suppressed = 0
        self._streams: Dict[str, Iterator[float]] = {}
        self._next: Dict[str, float] = {}
        self._route_rngs: Dict[str, np.random.Generator] = {}
        for lane_id in sorted(layout.approach_lanes):
            stream = spawn_stream(lane_id, lane_rate(layout, lane_id, demand), seed, settings.t_shift)
            self._streams[lane_id] = stream
            self._next[lane_id] = next(stream, math.inf)
            self._route_rngs[lane_id] = derive_rng(seed, "route", lane_id)

    def due(self, time: float) -> List[Tuple[str, float]]:
        """Pop every arrival at or before ``time``, ordered by lane id."""
        arrivals: List[Tuple[str, float]] = []
        for lane_id in sorted(self._next):
            while self._next[lane_id] <= time:
                arrivals.append((lane_id, self._next[lane_id]))
                self._next[lane_id] = next(self._streams[lane_id], math.inf)
        return arrivals

    def spawn(
        self,
        world: World,
        next_id: int,
        log: Optional[EpisodeLog] = None,
    ) -> List[VehicleState]:
        """Vehicles entering at the spawn points for the arrivals due now.

        An arrival is dropped while its lane is jammed back to the spawn
        point or the vehicle cap is reached.
        """
        spawned: List[VehicleState] = []
        active = len(world)
        for lane_id, arrival in self.due(world.time):
            route = choose_route(
                self.layout.routes_from(lane_id), self.settings.turn_weights, self._route_rngs[lane_id]
            )
            if self.max_vehicles is not None and active + len(spawned) >= self.max_vehicles:
                self._drop(log, "spawn_capped", lane_id, arrival)
                continue
            leader = _nearest_on_lane(lane_id, world.vehicles + tuple(spawned), self.layout)
            gap = math.inf
            speed = self.params.v0
            if leader is not None:
                gap = leader.rear - (route.spawn_s + 0.5 * self.vehicle.length)
                speed = min(self.params.v0, _safe_speed(gap, leader.v, self.params))
            if gap < self.settings.spawn_clearance:
                self._drop(log, "spawn_suppressed", lane_id, arrival, gap=gap)
                continue
            spawned.append(
                VehicleState(
                    id=next_id + len(spawned),
                    route_id=route.id,
                    s=route.spawn_s,
                    v=speed,
                    spawn_time=world.time,
                    length=self.vehicle.length,
                    width=self.vehicle.width,
                )
            )
        return spawned

    def _drop(self, log: Optional[EpisodeLog], kind: str, lane_id: str, arrival: float, **detail: float) -> None:
        self.suppressed += 1
        logger.debug("Dropped arrival on %s at %.2f (%s)", lane_id, arrival, kind)
        if log is not None:
            log.record(kind, lane=lane_id, arrival=arrival, **detail)


def _nearest_on_lane(
    lane_id: str,
    vehicles: Tuple[VehicleState, ...],
    layout: IntersectionLayout,
) -> Optional[VehicleState]:
    nearest: Optional[VehicleState] = None
    for state in vehicles:
        route = layout.route(state.route_id)
        if route.approach_lane != lane_id or state.rear >= route.halt_s:
            continue
        if nearest is None or state.rear < nearest.rear:
            nearest = state
    return nearest


def _safe_speed(gap: float, leader_speed: float, params: CfParams) -> float:
    margin = max(gap - params.min_gap, 0.0)
    return math.sqrt(2.0 * params.comfortable_decel * margin + leader_speed * leader_speed)

from __future__ import annotations

from typing import Dict, List, Set, Tuple

from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout

ArrivalStamp = Tuple[float, int]


class ReservationLedger:
    """Arrival stamps and conflict-interval grants for one episode.

    A granted vehicle holds every crossing relation of its route until its
    rear bumper passes the end of the corresponding interval plus
    ``clearance_margin``.
    """

    def __init__(self, layout: IntersectionLayout, clearance_margin: float = 0.0) -> None:
        self.layout = layout
        self.clearance_margin = clearance_margin
        self._stamps: Dict[int, ArrivalStamp] = {}
        self._granted: Set[int] = set()
        self._held: Dict[int, Set[str]] = {}
        self._routes: Dict[int, str] = {}
        self.last_grant_time = 0.0

    def stamp(self, state: VehicleState, time: float) -> ArrivalStamp:
        return self._stamps.setdefault(state.id, (time, state.id))

    def arrival(self, vehicle_id: int) -> ArrivalStamp:
        return self._stamps[vehicle_id]

    def has_stamp(self, vehicle_id: int) -> bool:
        return vehicle_id in self._stamps

    def is_granted(self, vehicle_id: int) -> bool:
        return vehicle_id in self._granted

    def grant(self, state: VehicleState, time: float) -> None:
        self._granted.add(state.id)
        self._routes[state.id] = state.route_id
        self._held[state.id] = {
            partner
            for partner in self.layout.crossing_partners(state.route_id)
            if not self.cleared(state, partner)
        }
        self.last_grant_time = time

    def holds(self, vehicle_id: int, partner_route: str) -> bool:
        return partner_route in self._held.get(vehicle_id, ())

    def cleared(self, state: VehicleState, partner_route: str) -> bool:
        """True once ``state`` has left its conflict interval with ``partner_route``."""
        relation = self.layout.crossing(state.route_id, partner_route)
        if relation is None:
            return True
        return state.rear > relation.interval_a.end + self.clearance_margin

    def release_cleared(self, world: World) -> None:
        for vehicle_id in list(self._stamps):
            if world.vehicle(vehicle_id) is None:
                self.forget(vehicle_id)
        for vehicle_id, held in self._held.items():
            state = world.vehicle(vehicle_id)
            if state is not None:
                held.difference_update(
                    {partner for partner in held if self.cleared(state, partner)}
                )

    def forget(self, vehicle_id: int) -> None:
        self._stamps.pop(vehicle_id, None)
        self._granted.discard(vehicle_id)
        self._held.pop(vehicle_id, None)
        self._routes.pop(vehicle_id, None)

    def any_held(self) -> bool:
        return any(self._held.values())

    def violations(self) -> List[Tuple[int, int]]:
        """Pairs of granted vehicles on different routes holding the same crossing."""
        pairs: List[Tuple[int, int]] = []
        holders = sorted(vid for vid, held in self._held.items() if held)
        for idx, first in enumerate(holders):
            for second in holders[idx + 1 :]:
                route_a, route_b = self._routes[first], self._routes[second]
                if route_a == route_b:
                    continue
                if route_b in self._held[first] and route_a in self._held[second]:
                    pairs.append((first, second))
        return pairs

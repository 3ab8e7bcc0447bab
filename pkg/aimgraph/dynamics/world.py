from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, Optional, Tuple

from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.geometry.routes import Route
from aimgraph.geometry.segments import Pose


@dataclass(frozen=True, eq=False)
class World:
    """Immutable snapshot of all vehicles at one instant, ordered by id."""

    time: float
    layout: IntersectionLayout
    vehicles: Tuple[VehicleState, ...] = ()
    _index: Dict[int, VehicleState] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.vehicles, key=lambda state: state.id))
        object.__setattr__(self, "vehicles", ordered)
        object.__setattr__(self, "_index", {state.id: state for state in ordered})

    def __len__(self) -> int:
        return len(self.vehicles)

    def __iter__(self) -> Iterator[VehicleState]:
        return iter(self.vehicles)

    def vehicle(self, vehicle_id: int) -> Optional[VehicleState]:
        return self._index.get(vehicle_id)

    def route_of(self, state: VehicleState) -> Route:
        return self.layout.route(state.route_id)

    def pose_of(self, state: VehicleState) -> Pose:
        cached = self.poses.get(state.id)
        if cached is not None and self._index.get(state.id) is state:
            return cached
        return self.route_of(state).pose_at(state.s)

    @cached_property
    def poses(self) -> Dict[int, Pose]:
        return {state.id: self.route_of(state).pose_at(state.s) for state in self.vehicles}

    def in_control_zone(self) -> Tuple[VehicleState, ...]:
        return tuple(
            state for state in self.vehicles if self.route_of(state).in_control_zone(state.s)
        )

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Dict, Optional

from aimgraph.behavior.car_following import CfParams, LeaderSource
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.behavior.leaders import resolve_leader
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import ControlSettings, KinematicLimits
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.geometry.routes import Route


class Controller(ABC):
    """Intersection controller owned by a single episode."""

    name: str
    learned: bool = False

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        """Prepare for a new episode on ``layout``."""

    @abstractmethod
    def accelerations(self, world: World) -> Dict[int, float]:
        """Return the commanded acceleration of every vehicle in ``world``."""


class RuleBasedController(Controller):
    """Shared plumbing for controllers that steer through car-following."""

    def __init__(
        self,
        params: CfParams = CfParams(),
        limits: KinematicLimits = KinematicLimits(),
        control: ControlSettings = ControlSettings(),
    ) -> None:
        self.params = params
        self.limits = limits
        self.control = control
        self.driver = CarFollowingDriver(params, limits)
        self.log: Optional[EpisodeLog] = None
        self.layout: Optional[IntersectionLayout] = None

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        self.layout = layout
        self.log = log
        self.driver.reset(log)


def drive(
    driver: CarFollowingDriver,
    ego: VehicleState,
    world: World,
    right_of_way: bool,
    halt_s: Optional[float] = None,
    source: LeaderSource = LeaderSource.HALT_POINT,
) -> float:
    view = resolve_leader(ego, world, right_of_way, halt_s=halt_s, source=source)
    return driver.accel(ego, view, world.time)


def past_halt(state: VehicleState, route: Route) -> bool:
    return state.front > route.halt_s


def time_to_cover(distance: float, v: float, accel: float, v_cap: float) -> float:
    """Time to travel ``distance`` from speed ``v`` accelerating at ``accel`` up to ``v_cap``."""
    if distance <= 0.0:
        return 0.0
    v = max(v, 0.0)
    if v >= v_cap or accel <= 0.0:
        return distance / v if v > 0.0 else math.inf
    t_cap = (v_cap - v) / accel
    d_cap = v * t_cap + 0.5 * accel * t_cap * t_cap
    if distance <= d_cap:
        return (-v + math.sqrt(v * v + 2.0 * accel * distance)) / accel
    return t_cap + (distance - d_cap) / v_cap


def time_to_reach(distance: float, v: float, floor: float = 0.1) -> float:
    """Constant-speed arrival time used for gap acceptance."""
    return max(distance, 0.0) / max(v, floor)

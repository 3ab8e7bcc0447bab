from __future__ import annotations

import math
from dataclasses import dataclass, replace

from aimgraph.core.types import KinematicLimits


@dataclass(frozen=True)
class VehicleState:
    """Longitudinal state of one vehicle on its route.

    ``s`` is the arc length of the body centre, ``accel`` the acceleration
    that was actually realised during the last step.
    """

    id: int
    route_id: str
    s: float
    v: float
    accel: float = 0.0
    spawn_time: float = 0.0
    length: float = 5.0
    width: float = 2.0

    @property
    def front(self) -> float:
        return self.s + 0.5 * self.length

    @property
    def rear(self) -> float:
        return self.s - 0.5 * self.length


def step_vehicle(
    state: VehicleState,
    accel: float,
    dt: float,
    limits: KinematicLimits = KinematicLimits(),
    max_s: float = math.inf,
) -> VehicleState:
    """Advance one vehicle by ``dt`` under a constant commanded acceleration.

    Speed saturates at 0 and ``v_max`` inside the step; the stored
    acceleration is the constant value that reproduces the distance travelled.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    a = min(max(accel, limits.a_min), limits.a_max)
    v = state.v
    v_next = v + a * dt

    if v_next < 0.0:
        distance = v * v / (-2.0 * a)
        v_next = 0.0
        applied = 2.0 * (distance - v * dt) / (dt * dt)
    elif v_next > limits.v_max and a > 0.0:
        t_cap = max(0.0, (limits.v_max - v) / a)
        distance = v * t_cap + 0.5 * a * t_cap * t_cap + limits.v_max * (dt - t_cap)
        v_next = limits.v_max
        applied = 2.0 * (distance - v * dt) / (dt * dt)
    else:
        distance = v * dt + 0.5 * a * dt * dt
        applied = a

    applied = min(max(applied, limits.a_min), limits.a_max)
    v_next = min(max(v_next, 0.0), limits.v_max)
    return replace(state, s=min(state.s + distance, max_s), v=v_next, accel=applied)

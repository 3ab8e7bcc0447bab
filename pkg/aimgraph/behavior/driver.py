from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from aimgraph.behavior.car_following import (
    CfParams,
    CfVariant,
    DriveOffContext,
    LeaderView,
    eidm_accel,
    idm_accel,
)
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import KinematicLimits
from aimgraph.dynamics.kinematics import VehicleState


@dataclass
class _DriveOff:
    started: float


class DriveOffTracker:
    """Per-vehicle drive-off bookkeeping for the EIDM variant.

    A drive-off starts when a vehicle at standstill sees a moving leader or
    free road beyond the minimum gap. It ends once the vehicle reaches the
    release speed or is held by a stationary obstacle again.
    """

    def __init__(self, params: CfParams) -> None:
        self.params = params
        self._active: Dict[int, _DriveOff] = {}

    def update(self, ego: VehicleState, view: LeaderView, time: float) -> Optional[DriveOffContext]:
        params = self.params
        current = self._active.get(ego.id)
        leader_moving = view.is_free or view.speed > params.standstill_speed
        if current is None:
            if ego.v < params.standstill_speed and leader_moving and view.gap > params.min_gap:
                current = _DriveOff(started=time)
                self._active[ego.id] = current
            else:
                return None
        elif ego.v >= params.release_speed or not leader_moving:
            del self._active[ego.id]
            return None
        return DriveOffContext(elapsed=time - current.started)

    def forget(self, vehicle_id: int) -> None:
        self._active.pop(vehicle_id, None)

    def reset(self) -> None:
        self._active.clear()


class CarFollowingDriver:
    """Stateful wrapper that turns a leader view into an acceleration."""

    def __init__(
        self,
        params: CfParams,
        limits: KinematicLimits,
        log: Optional[EpisodeLog] = None,
    ) -> None:
        self.params = params
        self.limits = limits
        self.log = log
        self.tracker = DriveOffTracker(params)

    def accel(self, ego: VehicleState, view: LeaderView, time: float) -> float:
        if not view.is_free and view.gap <= 0.0 and ego.v > 0.0 and self.log is not None:
            self.log.record(
                "emergency_clamp",
                ego.id,
                source=view.source.value,
                leader=view.vehicle_id,
                gap=view.gap,
            )
        if self.params.variant is CfVariant.IDM:
            return idm_accel(ego.v, view, self.params, self.limits)
        context = self.tracker.update(ego, view, time)
        return eidm_accel(ego.v, view, self.params, context, self.limits)

    def forget(self, vehicle_id: int) -> None:
        self.tracker.forget(vehicle_id)

    def reset(self, log: Optional[EpisodeLog] = None) -> None:
        self.tracker.reset()
        if log is not None:
            self.log = log



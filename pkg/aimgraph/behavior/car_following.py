from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from aimgraph.core.types import KinematicLimits


class CfVariant(str, Enum):
    IDM = "idm"
    EIDM = "eidm"


class LeaderSource(str, Enum):
    NONE = "none"
    VEHICLE = "vehicle"
    HALT_POINT = "halt_point"
    STOP_LINE = "stop_line"


@dataclass(frozen=True)
class CfParams:
    """Car-following parameters.

    ``drive_off_delay`` and ``release_speed`` only matter for the EIDM
    variant: a stopped vehicle whose leader departs waits ``drive_off_delay``
    seconds and then launches with the reduced desired gap until it reaches
    ``release_speed``.
    """

    v0: float = 10.0
    time_headway: float = 1.5
    min_gap: float = 2.0
    max_accel: float = 3.0
    comfortable_decel: float = 2.0
    delta: float = 4.0
    drive_off_delay: float = 0.5
    variant: CfVariant = CfVariant.EIDM
    release_speed: float = 3.0
    standstill_speed: float = 0.3

    def validate(self, limits: KinematicLimits) -> None:
        for name in (
            "v0",
            "time_headway",
            "min_gap",
            "max_accel",
            "comfortable_decel",
            "delta",
            "drive_off_delay",
            "release_speed",
            "standstill_speed",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"car-following parameter {name} must be positive")
        if self.max_accel > limits.a_max:
            raise ValueError("max_accel exceeds the actuator limit a_max")
        if self.comfortable_decel > abs(limits.a_min):
            raise ValueError("comfortable_decel exceeds the actuator limit |a_min|")


@dataclass(frozen=True)
class LeaderView:
    """What the ego vehicle follows: bumper-to-bumper gap and leader speed."""

    gap: float
    speed: float = 0.0
    source: LeaderSource = LeaderSource.VEHICLE
    vehicle_id: Optional[int] = None

    @classmethod
    def free_road(cls) -> "LeaderView":
        return cls(gap=math.inf, speed=0.0, source=LeaderSource.NONE)

    @property
    def is_free(self) -> bool:
        return math.isinf(self.gap)


@dataclass(frozen=True)
class DriveOffContext:
    """Seconds since a drive-off was triggered for one vehicle."""

    elapsed: float


def desired_gap(v: float, leader_speed: float, params: CfParams, with_headway: bool = True) -> float:
    approach = v * (v - leader_speed) / (2.0 * math.sqrt(params.max_accel * params.comfortable_decel))
    headway = v * params.time_headway if with_headway else 0.0
    return params.min_gap + max(0.0, headway + approach)


def equilibrium_gap(v: float, params: CfParams) -> float:
    """Gap at which a follower at constant speed v behind an equally fast leader has zero IDM acceleration."""
    if v >= params.v0:
        return math.inf
    return (params.min_gap + v * params.time_headway) / math.sqrt(1.0 - (v / params.v0) ** params.delta)


def idm_accel(
    v: float,
    view: LeaderView,
    params: CfParams,
    limits: KinematicLimits = KinematicLimits(),
    with_headway: bool = True,
) -> float:
    free_term = 1.0 - (v / params.v0) ** params.delta
    if view.is_free:
        accel = params.max_accel * free_term
    elif view.gap <= 0.0:
        return limits.a_min
    else:
        s_star = desired_gap(v, view.speed, params, with_headway)
        accel = params.max_accel * (free_term - (s_star / view.gap) ** 2)
    return min(max(accel, limits.a_min), limits.a_max)


def eidm_accel(
    v: float,
    view: LeaderView,
    params: CfParams,
    context: Optional[DriveOffContext],
    limits: KinematicLimits = KinematicLimits(),
) -> float:
    """IDM with a deterministic drive-off facet.

    Without an active context this is exactly ``idm_accel``. During the
    reaction delay the vehicle does not creep forward; afterwards the
    speed-dependent headway term is dropped until ``release_speed``.
    """
    if context is None or params.variant is CfVariant.IDM:
        return idm_accel(v, view, params, limits)
    if context.elapsed < params.drive_off_delay:
        return min(idm_accel(v, view, params, limits), 0.0)
    return idm_accel(v, view, params, limits, with_headway=False)

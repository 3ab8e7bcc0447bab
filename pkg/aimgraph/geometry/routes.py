from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Tuple

import numpy as np

from aimgraph.geometry.segments import Pose, Segment

CONTROL_ZONE_LENGTH = 50.0
COMPLETION_DISTANCE = 20.0
POLYLINE_STEP = 0.1


class TurnType(str, Enum):
    THROUGH = "through"
    LEFT = "left"
    RIGHT = "right"


class PriorityClass(str, Enum):
    MAIN = "main"
    SIDE = "side"


@dataclass(frozen=True)
class LaneSpan:
    """Part of a route that runs along one lane."""

    lane_id: str
    route_start: float
    route_end: float

    def contains(self, s: float) -> bool:
        return self.route_start <= s < self.route_end


@dataclass(frozen=True)
class Route:
    """Fixed path from a spawn point through the box to the exit lane.

    Arc length s is measured from the spawn point. The approach lane occupies
    [0, halt_s], the connector [halt_s, box_exit_s] and the exit lane the rest.
    """

    id: str
    segments: Tuple[Segment, ...]
    approach_lane: str
    exit_lane: str
    priority: PriorityClass
    turn: TurnType
    halt_s: float
    box_exit_s: float

    @cached_property
    def offsets(self) -> Tuple[float, ...]:
        offsets = [0.0]
        for segment in self.segments:
            offsets.append(offsets[-1] + segment.length)
        return tuple(offsets)

    @property
    def length(self) -> float:
        return self.offsets[-1]

    @property
    def box_entry_s(self) -> float:
        return self.halt_s

    @property
    def spawn_s(self) -> float:
        return 0.0

    @property
    def control_entry_s(self) -> float:
        return self.halt_s - CONTROL_ZONE_LENGTH

    @property
    def complete_s(self) -> float:
        return self.box_exit_s + COMPLETION_DISTANCE

    @property
    def connector_lane(self) -> str:
        return f"{self.id}/box"

    @cached_property
    def lane_spans(self) -> Tuple[LaneSpan, ...]:
        return (
            LaneSpan(self.approach_lane, 0.0, self.halt_s),
            LaneSpan(self.connector_lane, self.halt_s, self.box_exit_s),
            LaneSpan(self.exit_lane, self.box_exit_s, math.inf),
        )

    def lane_at(self, s: float) -> str:
        for span in self.lane_spans:
            if span.contains(s):
                return span.lane_id
        return self.approach_lane

    def in_control_zone(self, s: float) -> bool:
        return self.control_entry_s <= s <= self.complete_s

    def pose_at(self, s: float) -> Pose:
        return pose_at(self, s)

    @cached_property
    def polyline(self) -> np.ndarray:
        """Centre line sampled every 0.1 m."""
        return _sample_route(self, POLYLINE_STEP)

    def points(self, s_values: np.ndarray) -> np.ndarray:
        s_values = np.asarray(s_values, dtype=float)
        out = np.empty((s_values.size, 2))
        indices = np.searchsorted(self.offsets, s_values, side="right") - 1
        indices = np.clip(indices, 0, len(self.segments) - 1)
        for idx, segment in enumerate(self.segments):
            mask = indices == idx
            if mask.any():
                out[mask] = segment.points(s_values[mask] - self.offsets[idx])
        return out


def pose_at(route: Route, s: float, tolerance: float = 1e-9) -> Pose:
    """Exact pose on the route at arc length s."""
    if s < -tolerance or s > route.length + tolerance:
        raise ValueError(
            f"arc length {s} outside route {route.id} range [0, {route.length}]"
        )
    s = min(max(s, 0.0), route.length)
    offsets = route.offsets
    idx = bisect.bisect_right(offsets, s) - 1
    idx = min(max(idx, 0), len(route.segments) - 1)
    return route.segments[idx].pose_at(s - offsets[idx])


def _sample_route(route: Route, step: float) -> np.ndarray:
    count = max(2, int(math.ceil(route.length / step)) + 1)
    s_values = np.linspace(0.0, route.length, count)
    return route.points(s_values)

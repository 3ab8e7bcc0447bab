from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import LineString, Point

from aimgraph.geometry.routes import Route

logger = logging.getLogger(__name__)

SAMPLE_STEP = 0.1
BISECTION_STEPS = 50


class ConflictKind(str, Enum):
    CROSSING = "crossing"
    SAME_LANE_PREFIX = "same_lane_prefix"


@dataclass(frozen=True)
class ConflictInterval:
    begin: float
    end: float

    def __post_init__(self) -> None:
        if self.end < self.begin:
            raise ValueError(f"empty conflict interval [{self.begin}, {self.end}]")

    @property
    def length(self) -> float:
        return self.end - self.begin

    def contains(self, s: float) -> bool:
        return self.begin <= s <= self.end


@dataclass(frozen=True)
class ConflictRelation:
    """Pairwise relation; interval_a lies on route_a, interval_b on route_b."""

    route_a: str
    route_b: str
    kind: ConflictKind
    interval_a: ConflictInterval
    interval_b: ConflictInterval

    @property
    def is_crossing(self) -> bool:
        return self.kind is ConflictKind.CROSSING

    def swapped(self) -> "ConflictRelation":
        return ConflictRelation(
            route_a=self.route_b,
            route_b=self.route_a,
            kind=self.kind,
            interval_a=self.interval_b,
            interval_b=self.interval_a,
        )


def conflict_between(
    route_a: Route, route_b: Route, half_width: float
) -> Optional[ConflictRelation]:
    """Classify how two routes of one layout interact.

    Routes sharing their approach lane get a same-lane-prefix relation spanning
    the shared stretch. Otherwise the routes cross iff their centre lines
    dilated by ``half_width`` intersect; the intervals then hold the arc
    lengths where the centre lines come within two half widths of each other,
    restricted to the box whenever the overlap reaches into it.
    """
    if route_a.id == route_b.id:
        return None
    line_a = LineString(route_a.polyline)
    line_b = LineString(route_b.polyline)
    threshold = 2.0 * half_width

    if route_a.approach_lane == route_b.approach_lane:
        return ConflictRelation(
            route_a=route_a.id,
            route_b=route_b.id,
            kind=ConflictKind.SAME_LANE_PREFIX,
            interval_a=ConflictInterval(0.0, _separation_point(route_a, line_b, threshold)),
            interval_b=ConflictInterval(0.0, _separation_point(route_b, line_a, threshold)),
        )

    if not line_a.buffer(half_width).intersects(line_b.buffer(half_width)):
        return None
    interval_a = _crossing_interval(route_a, line_b, threshold)
    interval_b = _crossing_interval(route_b, line_a, threshold)
    if interval_a is None or interval_b is None:
        logger.debug("swept areas of %s and %s only touch", route_a.id, route_b.id)
        return None
    return ConflictRelation(
        route_a=route_a.id,
        route_b=route_b.id,
        kind=ConflictKind.CROSSING,
        interval_a=interval_a,
        interval_b=interval_b,
    )


def _crossing_interval(
    route: Route, other: LineString, threshold: float
) -> Optional[ConflictInterval]:
    interval = _threshold_hull(route, other, threshold, route.box_entry_s, route.box_exit_s)
    if interval is None:
        interval = _threshold_hull(route, other, threshold, 0.0, route.length)
    return interval


def _threshold_hull(
    route: Route, other: LineString, threshold: float, lo: float, hi: float
) -> Optional[ConflictInterval]:
    s_values = _sample_grid(lo, hi)
    distances = shapely.distance(shapely.points(route.points(s_values)), other)
    inside = np.flatnonzero(distances <= threshold)
    if inside.size == 0:
        return None
    first, last = int(inside[0]), int(inside[-1])
    begin = float(s_values[first])
    if first > 0:
        begin = _refine(route, other, threshold, float(s_values[first - 1]), begin)
    end = float(s_values[last])
    if last < s_values.size - 1:
        end = _refine(route, other, threshold, float(s_values[last + 1]), end)
    return ConflictInterval(begin, end)


def _separation_point(route: Route, other: LineString, threshold: float) -> float:
    s_values = _sample_grid(0.0, route.length)
    distances = shapely.distance(shapely.points(route.points(s_values)), other)
    apart = np.flatnonzero(distances > threshold)
    if apart.size == 0:
        return route.length
    first = int(apart[0])
    if first == 0:
        return 0.0
    return _refine(route, other, threshold, float(s_values[first]), float(s_values[first - 1]))


def _refine(
    route: Route, other: LineString, threshold: float, outside: float, inside: float
) -> float:
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (outside + inside)
        pose = route.pose_at(mid)
        if other.distance(Point(pose.x, pose.y)) <= threshold:
            inside = mid
        else:
            outside = mid
    return inside


def _sample_grid(lo: float, hi: float) -> np.ndarray:
    count = max(2, int(math.ceil((hi - lo) / SAMPLE_STEP)) + 1)
    return np.linspace(lo, hi, count)

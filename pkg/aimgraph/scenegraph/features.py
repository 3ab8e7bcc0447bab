from __future__ import annotations

import math
from typing import Optional

from aimgraph.core.events import EpisodeLog
from aimgraph.geometry.segments import Pose, wrap_angle


def bearing(source: Pose, target: Pose, log: Optional[EpisodeLog] = None) -> float:
    """Direction of ``source`` seen from ``target``, relative to the target's heading."""
    dx = source.x - target.x
    dy = source.y - target.y
    if dx == 0.0 and dy == 0.0:
        if log is not None:
            log.record("coincident_positions", None, x=source.x, y=source.y)
        return 0.0
    return wrap_angle(math.atan2(dy, dx) - target.heading)


def pair_distance(source: Pose, target: Pose, sigma_lon: float = 10.0, sigma_lat: float = 2.0) -> float:
    """Elliptical distance of ``source`` in the frame of ``target``.

    The ellipse is aligned with the target's heading, with standard
    deviations ``sigma_lon`` along and ``sigma_lat`` across it.
    """
    dx = source.x - target.x
    dy = source.y - target.y
    cos_h, sin_h = math.cos(target.heading), math.sin(target.heading)
    lon = dx * cos_h + dy * sin_h
    lat = -dx * sin_h + dy * cos_h
    return math.sqrt((lon / sigma_lon) ** 2 + (lat / sigma_lat) ** 2)

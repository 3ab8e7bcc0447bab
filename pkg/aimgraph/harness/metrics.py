from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

STOP_SPEED = 0.3


@dataclass
class VehicleRecord:
    """Per-vehicle bookkeeping accumulated while an episode runs."""

    id: int
    route_id: str
    spawn_time: float
    min_speed: float = math.inf
    stopped: bool = False
    completion_time: Optional[float] = None
    collided: bool = False

    @property
    def completed(self) -> bool:
        return self.completion_time is not None

    def observe(self, speed: float, stop_speed: float = STOP_SPEED) -> None:
        self.min_speed = min(self.min_speed, speed)
        self.stopped = self.stopped or stopped((speed,), stop_speed)


def duration_of(record: VehicleRecord) -> Optional[float]:
    """Time from spawn until completion; None while the vehicle is still en route."""
    if record.completion_time is None:
        return None
    return record.completion_time - record.spawn_time


def stopped(speeds: Iterable[float], stop_speed: float = STOP_SPEED) -> bool:
    """True if any sampled speed of a trajectory is below ``stop_speed``."""
    return any(speed < stop_speed for speed in speeds)


@dataclass(frozen=True)
class MetricsRecord:
    """Outcome of one episode.

    Durations and stop flags cover completed vehicles only, in completion
    order. ``collided`` counts vehicles removed after a collision and
    ``collisions`` the colliding pairs.
    """

    episode_id: str
    layout: str
    controller: str
    demand: float
    seed: int
    duration: float
    flow_rate: float
    durations: Tuple[float, ...] = ()
    stop_flags: Tuple[bool, ...] = ()
    collisions: int = 0
    collided: int = 0
    spawned: int = 0
    completed: int = 0
    active: int = 0
    suppressed: int = 0
    safety_violation: bool = False
    events: Mapping[str, int] = field(default_factory=dict)

    @property
    def stop_percentage(self) -> Optional[float]:
        if not self.stop_flags:
            return None
        return 100.0 * sum(self.stop_flags) / len(self.stop_flags)

    @property
    def median_duration(self) -> Optional[float]:
        if not self.durations:
            return None
        return float(np.median(self.durations))

    @property
    def collision_rate(self) -> float:
        """Collided vehicles per spawned vehicle, in percent."""
        return 100.0 * self.collided / self.spawned if self.spawned else 0.0

    @property
    def conserved(self) -> bool:
        return self.spawned == self.completed + self.active + self.collided

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["durations"] = list(self.durations)
        data["stop_flags"] = list(self.stop_flags)
        data["events"] = dict(self.events)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricsRecord":
        payload = dict(data)
        payload["durations"] = tuple(float(value) for value in payload.get("durations", ()))
        payload["stop_flags"] = tuple(bool(value) for value in payload.get("stop_flags", ()))
        payload["events"] = dict(payload.get("events", {}))
        return cls(**payload)


def quartiles(values: Sequence[float]) -> Dict[str, Optional[float]]:
    if not values:
        return {"count": 0, "q1": None, "median": None, "q3": None, "min": None, "max": None}
    data = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(data, [25.0, 50.0, 75.0])
    return {
        "count": int(data.size),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "min": float(data.min()),
        "max": float(data.max()),
    }


def flow_bins(
    records: Sequence[MetricsRecord],
    bin_width: float = 0.1,
    min_count: int = 5,
) -> List[Dict[str, Any]]:
    """Vehicle durations grouped by the episode flow rate.

    Episodes fall into bins ``[k * bin_width, (k + 1) * bin_width)``; bins
    with fewer than ``min_count`` episodes are suppressed.
    """
    grouped: Dict[int, List[MetricsRecord]] = {}
    for record in records:
        index = int(math.floor(record.flow_rate / bin_width + 1e-9))
        grouped.setdefault(index, []).append(record)
    bins = []
    for index in sorted(grouped):
        members = grouped[index]
        if len(members) < min_count:
            continue
        durations = [value for record in members for value in record.durations]
        bins.append(
            {
                "flow_low": round(index * bin_width, 10),
                "flow_high": round((index + 1) * bin_width, 10),
                "episodes": len(members),
                "durations": quartiles(durations),
            }
        )
    return bins


def summarize(records: Sequence[MetricsRecord]) -> Dict[str, Any]:
    stop_values = [record.stop_percentage for record in records if record.stop_percentage is not None]
    spawned = sum(record.spawned for record in records)
    collided = sum(record.collided for record in records)
    return {
        "episodes": len(records),
        "flow_rate": quartiles([record.flow_rate for record in records]),
        "stop_percentage": quartiles(stop_values),
        "duration": quartiles([value for record in records for value in record.durations]),
        "collision_rate": 100.0 * collided / spawned if spawned else 0.0,
        "safety_violations": sum(1 for record in records if record.safety_violation),
    }

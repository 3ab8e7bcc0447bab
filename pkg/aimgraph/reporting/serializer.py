from __future__ import annotations

import json
from typing import Any, Dict, Iterable, List

from aimgraph.harness.metrics import MetricsRecord

CSV_COLUMNS = (
    "episode_id",
    "layout",
    "controller",
    "demand",
    "seed",
    "duration",
    "flow_rate",
    "spawned",
    "completed",
    "active",
    "collided",
    "collisions",
    "suppressed",
    "stop_percentage",
    "median_duration",
    "collision_rate",
    "safety_violation",
)


def record_to_row(record: MetricsRecord) -> Dict[str, Any]:
    return {
        "episode_id": record.episode_id,
        "layout": record.layout,
        "controller": record.controller,
        "demand": record.demand,
        "seed": record.seed,
        "duration": record.duration,
        "flow_rate": record.flow_rate,
        "spawned": record.spawned,
        "completed": record.completed,
        "active": record.active,
        "collided": record.collided,
        "collisions": record.collisions,
        "suppressed": record.suppressed,
        "stop_percentage": record.stop_percentage,
        "median_duration": record.median_duration,
        "collision_rate": record.collision_rate,
        "safety_violation": record.safety_violation,
    }


def records_to_dicts(records: Iterable[MetricsRecord], include_vehicles: bool = False) -> List[Dict[str, Any]]:
    rows = []
    for record in records:
        row = record_to_row(record)
        row["events"] = dict(record.events)
        if include_vehicles:
            row["durations"] = list(record.durations)
            row["stop_flags"] = list(record.stop_flags)
        rows.append(row)
    return rows


def records_to_json(records: Iterable[MetricsRecord], include_vehicles: bool = True) -> str:
    return json.dumps(records_to_dicts(records, include_vehicles), ensure_ascii=False, indent=2)

"""Intersection layouts, routes and conflict relations."""

from aimgraph.geometry.conflicts import (
    ConflictInterval,
    ConflictKind,
    ConflictRelation,
    conflict_between,
)
from aimgraph.geometry.layouts import (
    IntersectionLayout,
    Lane,
    LayoutError,
    build_layout,
    derive_connector,
    load_layout_file,
    parse_layout,
)
from aimgraph.geometry.routes import (
    COMPLETION_DISTANCE,
    CONTROL_ZONE_LENGTH,
    LaneSpan,
    PriorityClass,
    Route,
    TurnType,
    pose_at,
)
from aimgraph.geometry.segments import ArcSegment, Pose, Segment, StraightSegment, wrap_angle

__all__ = [
    "COMPLETION_DISTANCE",
    "CONTROL_ZONE_LENGTH",
    "ArcSegment",
    "ConflictInterval",
    "ConflictKind",
    "ConflictRelation",
    "IntersectionLayout",
    "Lane",
    "LaneSpan",
    "LayoutError",
    "Pose",
    "PriorityClass",
    "Route",
    "Segment",
    "StraightSegment",
    "TurnType",
    "build_layout",
    "conflict_between",
    "derive_connector",
    "load_layout_file",
    "parse_layout",
    "pose_at",
    "wrap_angle",
]

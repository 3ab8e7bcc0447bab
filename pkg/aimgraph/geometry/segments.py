from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


def wrap_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Pose:
    """Body-centre position in metres and heading in radians."""

    x: float
    y: float
    heading: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", wrap_angle(self.heading))


class Segment(ABC):
    """A piece of a route parameterised by arc length u in [0, length]."""

    start: Pose
    length: float

    @abstractmethod
    def pose_at(self, u: float) -> Pose:
        raise NotImplementedError

    @abstractmethod
    def points(self, u: np.ndarray) -> np.ndarray:
        """Vectorised positions, shape (len(u), 2)."""
        raise NotImplementedError

    @property
    def end(self) -> Pose:
        return self.pose_at(self.length)


@dataclass(frozen=True)
class StraightSegment(Segment):
    start: Pose
    length: float

    def pose_at(self, u: float) -> Pose:
        h = self.start.heading
        return Pose(self.start.x + u * math.cos(h), self.start.y + u * math.sin(h), h)

    def points(self, u: np.ndarray) -> np.ndarray:
        h = self.start.heading
        return np.column_stack(
            (self.start.x + u * math.cos(h), self.start.y + u * math.sin(h))
        )


@dataclass(frozen=True)
class ArcSegment(Segment):
    """Circular arc; positive curvature turns left."""

    start: Pose
    length: float
    curvature: float

    def __post_init__(self) -> None:
        if self.curvature == 0.0:
            raise ValueError("arc curvature must be nonzero")

    @property
    def radius(self) -> float:
        return 1.0 / abs(self.curvature)

    def pose_at(self, u: float) -> Pose:
        h0 = self.start.heading
        h = h0 + self.curvature * u
        x = self.start.x + (math.sin(h) - math.sin(h0)) / self.curvature
        y = self.start.y - (math.cos(h) - math.cos(h0)) / self.curvature
        return Pose(x, y, h)

    def points(self, u: np.ndarray) -> np.ndarray:
        h0 = self.start.heading
        h = h0 + self.curvature * u
        x = self.start.x + (np.sin(h) - math.sin(h0)) / self.curvature
        y = self.start.y - (np.cos(h) - math.cos(h0)) / self.curvature
        return np.column_stack((x, y))

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Tuple

import numpy as np

from aimgraph.core.rng import derive_rng
from aimgraph.scenegraph.graph import SceneGraph


@dataclass(frozen=True, eq=False)
class Transition:
    """One environment step of the joint MDP.

    ``actions`` are normalised to [-1, 1] and follow the vertex order of
    ``graph``. ``matching`` maps each vehicle id present in both graphs to
    its (index in graph, index in next_graph).
    """

    graph: SceneGraph
    actions: np.ndarray
    reward: float
    next_graph: SceneGraph
    terminal: bool
    matching: Dict[int, Tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.actions.shape != (self.graph.num_vertices,):
            raise ValueError(
                f"Expected {self.graph.num_vertices} actions, got shape {self.actions.shape}"
            )


def match_vertices(graph: SceneGraph, next_graph: SceneGraph) -> Dict[int, Tuple[int, int]]:
    following = {vehicle_id: index for index, vehicle_id in enumerate(next_graph.vehicle_ids)}
    return {
        vehicle_id: (index, following[vehicle_id])
        for index, vehicle_id in enumerate(graph.vehicle_ids)
        if vehicle_id in following
    }


class ReplayBuffer:
    """Bounded FIFO store of transitions with a seeded uniform sampler."""

    def __init__(self, capacity: int, seed: int = 0) -> None:
        if capacity < 1:
            raise ValueError("Replay capacity must be at least 1")
        self.capacity = capacity
        self._items: Deque[Transition] = deque(maxlen=capacity)
        self._rng = derive_rng(seed, "replay")

    def __len__(self) -> int:
        return len(self._items)

    def add(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, batch_size: int) -> List[Transition]:
        if not self._items:
            raise ValueError("Cannot sample from an empty replay buffer")
        size = min(batch_size, len(self._items))
        indices = self._rng.choice(len(self._items), size=size, replace=False)
        return [self._items[int(index)] for index in indices]

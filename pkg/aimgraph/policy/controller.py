from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Dict, Optional, Union

from aimgraph.baselines.base import Controller, drive
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.core.events import EpisodeLog
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout
from aimgraph.policy.networks import actor_forward
from aimgraph.policy.serialization import load_weights
from aimgraph.policy.weights import ActorWeights, PolicyWeights
from aimgraph.scenegraph.graph import SceneGraph, observe

if TYPE_CHECKING:
    from aimgraph.config.loader import ExperimentConfig


class PolicyController(Controller):
    """Learned joint policy for the control zone.

    Vehicles outside the control zone follow the car-following model on a
    free road; the graph policy commands everything inside it.
    """

    name = "rl"
    learned = True

    def __init__(
        self,
        weights: Union[PolicyWeights, ActorWeights, str, Path],
        config: "ExperimentConfig",
    ) -> None:
        if isinstance(weights, (str, Path)):
            weights = load_weights(weights, config.network)
        self.actor = weights.actor if isinstance(weights, PolicyWeights) else weights
        self.config = config
        self.driver = CarFollowingDriver(config.car_following, config.limits)
        self.log: Optional[EpisodeLog] = None
        self.last_graph: Optional[SceneGraph] = None

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        self.log = log
        self.last_graph = None
        self.driver.reset(log)

    def accelerations(self, world: World) -> Dict[int, float]:
        config = self.config
        graph = observe(world, config.graph, config.limits, self.log)
        actions = actor_forward(graph, self.actor, config.limits, config.network.squash)
        commanded = dict(zip(graph.vehicle_ids, actions.tolist()))
        for state in world:
            if state.id not in commanded:
                commanded[state.id] = drive(self.driver, state, world, right_of_way=True)
        self.last_graph = graph
        return commanded

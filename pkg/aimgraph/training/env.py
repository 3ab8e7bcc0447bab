from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional

import numpy as np

from aimgraph.baselines.base import Controller, drive
from aimgraph.behavior.driver import CarFollowingDriver
from aimgraph.config.loader import ExperimentConfig
from aimgraph.core.events import EpisodeLog
from aimgraph.core.rng import derive_rng, derive_seed
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout, build_layout
from aimgraph.harness.simulation import Simulation
from aimgraph.scenegraph.graph import SceneGraph, observe
from aimgraph.training.reward import RewardSpec, compute_reward

logger = logging.getLogger(__name__)


class ExternalActionController(Controller):
    """Applies accelerations chosen outside the simulation loop.

    Vehicles without a pending action follow the car-following model on a
    free road.
    """

    name = "external"
    learned = True

    def __init__(self, config: ExperimentConfig) -> None:
        self.driver = CarFollowingDriver(config.car_following, config.limits)
        self._pending: Dict[int, float] = {}

    def reset(self, layout: IntersectionLayout, log: Optional[EpisodeLog] = None) -> None:
        self._pending = {}
        self.driver.reset(log)

    def set_actions(self, actions: Mapping[int, float]) -> None:
        self._pending = dict(actions)

    def accelerations(self, world: World) -> Dict[int, float]:
        commanded = {}
        for state in world:
            if state.id in self._pending:
                commanded[state.id] = self._pending[state.id]
            else:
                commanded[state.id] = drive(self.driver, state, world, right_of_way=True)
        self._pending = {}
        return commanded


@dataclass(frozen=True, eq=False)
class EnvStep:
    graph: SceneGraph
    reward: float
    terminal: bool
    truncated: bool
    collisions: int


class TrainingEnv:
    """Episodic view of the simulator for the learning agent.

    Each episode draws its demand uniformly from the training range and
    caps the number of simultaneous vehicles for the layout. A collision
    ends the episode when ``terminal_on_collision`` is set; the time limit only
    truncates it.
    """

    def __init__(self, config: ExperimentConfig, seed: int = 0, layout: Optional[str] = None) -> None:
        self.config = config
        self.seed = seed
        self.layout_kind = (layout or config.scenario.layout).upper()
        self.layout = build_layout(self.layout_kind, config.vehicle.half_width)
        self.reward_spec = RewardSpec.from_settings(config.training)
        self.controller = ExternalActionController(config)
        self._demand_rng = derive_rng(seed, "demand")
        self.episode = -1
        self.simulation: Optional[Simulation] = None
        self.graph: Optional[SceneGraph] = None

    @property
    def log(self) -> Optional[EpisodeLog]:
        return self.simulation.log if self.simulation else None

    def reset(self) -> SceneGraph:
        training = self.config.training
        self.episode += 1
        demand = float(self._demand_rng.uniform(training.demand_low, training.demand_high))
        scenario = replace(
            self.config.scenario,
            layout=self.layout_kind,
            controller="rl",
            demand=demand,
            duration=training.episode_duration,
            seed=derive_seed(self.seed, "episode", self.episode) % 2**32,
        )
        episode_config = replace(self.config, scenario=scenario)
        cap = training.vehicle_caps.get(self.layout_kind)
        self.simulation = Simulation(episode_config, self.controller, layout=self.layout, max_vehicles=cap)
        logger.debug("Episode %d on %s at demand %.3f", self.episode, self.layout_kind, demand)
        self.graph = self._observe(self.simulation.world)
        return self.graph

    def step(self, accelerations: np.ndarray) -> EnvStep:
        if self.simulation is None or self.graph is None:
            raise RuntimeError("Call reset() before step()")
        graph = self.graph
        accelerations = np.asarray(accelerations, dtype=float).reshape(-1)
        if accelerations.shape[0] != graph.num_vertices:
            raise ValueError(
                f"Expected {graph.num_vertices} accelerations, got {accelerations.shape[0]}"
            )
        actions = dict(zip(graph.vehicle_ids, accelerations.tolist()))
        before = self.simulation.world
        self.controller.set_actions(actions)
        result = self.simulation.step()
        collision = bool(result.collisions)
        reward = 0.0
        if actions:
            reward = compute_reward(
                before,
                actions,
                collision,
                self.config.car_following.v0,
                self.reward_spec,
                self.config.limits,
            )
        terminal = collision and self.reward_spec.terminal_on_collision
        self.graph = self._observe(self.simulation.world)
        return EnvStep(
            graph=self.graph,
            reward=reward,
            terminal=terminal,
            truncated=self.simulation.done and not terminal,
            collisions=len(result.collisions),
        )

    def _observe(self, world: World) -> SceneGraph:
        return observe(world, self.config.graph, self.config.limits, self.log)

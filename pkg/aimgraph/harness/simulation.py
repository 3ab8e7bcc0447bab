from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Dict, FrozenSet, List, Optional, Set, Tuple

from aimgraph.baselines.base import Controller
from aimgraph.core.events import EpisodeLog
from aimgraph.dynamics.collisions import check_collisions
from aimgraph.dynamics.kinematics import VehicleState, step_vehicle
from aimgraph.dynamics.world import World
from aimgraph.geometry.layouts import IntersectionLayout, build_layout
from aimgraph.harness.metrics import MetricsRecord, VehicleRecord, duration_of
from aimgraph.harness.traffic import TrafficGenerator

if TYPE_CHECKING:
    from aimgraph.config.loader import ExperimentConfig

logger = logging.getLogger(__name__)


class SafetyViolation(RuntimeError):
    """A non-learned controller let two vehicles collide."""

    def __init__(self, episode_id: str, pairs: Tuple[Tuple[int, int], ...] = ()) -> None:
        self.episode_id = episode_id
        self.pairs = pairs
        detail = f" (pairs {list(pairs)})" if pairs else ""
        super().__init__(f"Collision under a rule-based controller in episode {episode_id}{detail}")


@dataclass(frozen=True)
class StepResult:
    """What happened during one simulation step.

    ``observed`` is the world the controller acted on, after spawning.
    """

    observed: World
    commanded: Dict[int, float]
    world: World
    collisions: FrozenSet[Tuple[int, int]]
    completed: Tuple[int, ...]
    collided: Tuple[int, ...]


def episode_id(config: "ExperimentConfig") -> str:
    scenario = config.scenario
    return f"{scenario.layout}-{scenario.controller}-d{scenario.demand:.4f}-s{scenario.seed}"


class Simulation:
    """Fixed-step episode loop.

    Each step spawns arrivals, asks the controller for accelerations,
    integrates, removes collided vehicles, updates stop flags and retires
    vehicles 20 m past the box with an interpolated completion time.
    """

    def __init__(
        self,
        config: "ExperimentConfig",
        controller: Controller,
        layout: Optional[IntersectionLayout] = None,
        max_vehicles: Optional[int] = None,
    ) -> None:
        scenario = config.scenario
        self.config = config
        self.controller = controller
        self.layout = layout or build_layout(scenario.layout, config.vehicle.half_width)
        self.log = EpisodeLog()
        self.traffic = TrafficGenerator(
            self.layout,
            scenario.demand,
            scenario.seed,
            settings=config.traffic,
            params=config.car_following,
            vehicle=config.vehicle,
            max_vehicles=max_vehicles,
        )
        self.world = World(time=0.0, layout=self.layout)
        self.records: Dict[int, VehicleRecord] = {}
        self.completion_order: List[int] = []
        self.collision_pairs = 0
        self.safety_violation = False
        self.violations: List[Tuple[int, int]] = []
        self.steps = 0
        self.total_steps = max(1, int(round(scenario.duration / config.limits.dt)))
        self._next_id = 0
        controller.reset(self.layout, self.log)

    @property
    def done(self) -> bool:
        return self.steps >= self.total_steps

    @property
    def time(self) -> float:
        return self.world.time

    def step(self) -> StepResult:
        limits = self.config.limits
        dt = limits.dt
        self.log.time = self.world.time

        spawned = self.traffic.spawn(self.world, self._next_id, self.log)
        for state in spawned:
            self.records[state.id] = VehicleRecord(
                id=state.id, route_id=state.route_id, spawn_time=state.spawn_time
            )
            self.records[state.id].observe(state.v, self.config.control.stop_speed)
        self._next_id += len(spawned)
        observed = replace(self.world, vehicles=self.world.vehicles + tuple(spawned))

        commanded = self.controller.accelerations(observed)
        moved = []
        for state in observed:
            route = observed.route_of(state)
            moved.append(step_vehicle(state, commanded[state.id], dt, limits, max_s=route.length))
        time = round(observed.time + dt, 9)

        pairs = frozenset(check_collisions(moved, self.layout))
        collided: Set[int] = {vehicle_id for pair in pairs for vehicle_id in pair}
        if pairs:
            self.collision_pairs += len(pairs)
            for first, second in sorted(pairs):
                self.log.record("collision", first, other=second)
            if not self.controller.learned:
                self.safety_violation = True
                self.violations.extend(sorted(pairs))
                logger.warning(
                    "Collision under %s at t=%.1f: %s", self.controller.name, time, sorted(pairs)
                )

        remaining: List[VehicleState] = []
        completed: List[int] = []
        previous = {state.id: state for state in observed}
        for state in moved:
            record = self.records[state.id]
            if state.id in collided:
                record.collided = True
                continue
            record.observe(state.v, self.config.control.stop_speed)
            route = self.layout.route(state.route_id)
            if state.s >= route.complete_s:
                before = previous[state.id].s
                fraction = (route.complete_s - before) / (state.s - before) if state.s > before else 1.0
                record.completion_time = observed.time + fraction * dt
                completed.append(state.id)
                self.completion_order.append(state.id)
                continue
            remaining.append(state)

        self.world = World(time=time, layout=self.layout, vehicles=tuple(remaining))
        self.steps += 1
        return StepResult(
            observed=observed,
            commanded=commanded,
            world=self.world,
            collisions=pairs,
            completed=tuple(completed),
            collided=tuple(sorted(collided)),
        )

    def run(self) -> MetricsRecord:
        while not self.done:
            self.step()
        return self.metrics()

    def metrics(self) -> MetricsRecord:
        scenario = self.config.scenario
        finished = [self.records[vehicle_id] for vehicle_id in self.completion_order]
        durations = tuple(duration_of(record) for record in finished)
        elapsed = self.steps * self.config.limits.dt
        return MetricsRecord(
            episode_id=episode_id(self.config),
            layout=scenario.layout,
            controller=scenario.controller,
            demand=scenario.demand,
            seed=scenario.seed,
            duration=elapsed,
            flow_rate=len(finished) / elapsed if elapsed > 0 else 0.0,
            durations=durations,  # type: ignore[arg-type]
            stop_flags=tuple(record.stopped for record in finished),
            collisions=self.collision_pairs,
            collided=sum(1 for record in self.records.values() if record.collided),
            spawned=len(self.records),
            completed=len(finished),
            active=len(self.world),
            suppressed=self.traffic.suppressed,
            safety_violation=self.safety_violation,
            events=self.log.counts(),
        )


def run_episode(
    config: "ExperimentConfig",
    weights: Optional[object] = None,
    controller: Optional[Controller] = None,
) -> MetricsRecord:
    """Run one episode of ``config.scenario`` and return its metrics.

    Collided vehicles are removed and the episode continues; under a
    rule-based controller the record is flagged as a safety violation.
    """
    if controller is None:
        from aimgraph.baselines.registry import build_controller

        controller = build_controller(
            config.scenario.controller, config, weights=weights or config.scenario.weights
        )
    record = Simulation(config, controller).run()
    logger.debug(
        "Episode %s: flow %.3f veh/s, %d/%d completed",
        record.episode_id,
        record.flow_rate,
        record.completed,
        record.spawned,
    )
    return record


def ensure_safe(record: MetricsRecord) -> MetricsRecord:
    if record.safety_violation:
        raise SafetyViolation(record.episode_id)
    return record

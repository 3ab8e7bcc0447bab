from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from aimgraph.config.loader import ExperimentConfig
from aimgraph.core.rng import derive_rng, derive_seed
from aimgraph.core.types import TrainingSettings
from aimgraph.harness.simulation import run_episode
from aimgraph.policy.controller import PolicyController
from aimgraph.policy.networks import actor_pass, backward, critic_pass, to_acceleration
from aimgraph.policy.serialization import load_weights
from aimgraph.policy.weights import PolicyWeights, init_policy
from aimgraph.training.env import TrainingEnv
from aimgraph.training.optim import Adam, soft_update
from aimgraph.training.replay import ReplayBuffer, Transition, match_vertices

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "episode", "return", "critic_loss", "actor_loss", "eval_flow_rate")


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, critic_loss: float, actor_loss: Optional[float]) -> None:
        self.step = step
        self.critic_loss = critic_loss
        self.actor_loss = actor_loss
        super().__init__(
            f"Training diverged at step {step}: critic loss {critic_loss}, actor loss {actor_loss}"
        )


@dataclass(frozen=True)
class LogRow:
    step: int
    episode: int
    episode_return: Optional[float] = None
    critic_loss: Optional[float] = None
    actor_loss: Optional[float] = None
    eval_flow_rate: Optional[float] = None

    def as_csv(self) -> Dict[str, str]:
        values = (
            self.step,
            self.episode,
            self.episode_return,
            self.critic_loss,
            self.actor_loss,
            self.eval_flow_rate,
        )
        return {
            column: "" if value is None else (repr(value) if isinstance(value, float) else str(value))
            for column, value in zip(LOG_COLUMNS, values)
        }


class TrainingLog:
    """Append-only CSV log; rows are also kept in memory."""

    def __init__(self, path: Optional[Union[str, Path]] = None) -> None:
        self.rows: List[LogRow] = []
        self.path = Path(path) if path else None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", newline="", encoding="utf-8") as handle:
                csv.DictWriter(handle, fieldnames=LOG_COLUMNS).writeheader()

    def append(self, row: LogRow) -> None:
        self.rows.append(row)
        if self.path:
            with self.path.open("a", newline="", encoding="utf-8") as handle:
                csv.DictWriter(handle, fieldnames=LOG_COLUMNS).writerow(row.as_csv())


@dataclass(frozen=True, eq=False)
class TrainingResult:
    weights: PolicyWeights
    rows: Tuple[LogRow, ...]
    episodes: int
    updates: int


def critic_target(
    batch: Sequence[Transition],
    target: PolicyWeights,
    settings: TrainingSettings,
    rng: np.random.Generator,
    squash: str = "tanh",
) -> np.ndarray:
    """TD3 regression targets with clipped target-policy smoothing.

    Terminal transitions and empty successor graphs regress onto the reward.
    """
    targets = np.empty(len(batch))
    for index, transition in enumerate(batch):
        next_graph = transition.next_graph
        if transition.terminal or next_graph.num_vertices == 0:
            targets[index] = transition.reward
            continue
        actions, _ = actor_pass(next_graph, target.actor, squash)
        noise = np.clip(
            rng.normal(0.0, settings.target_noise, size=actions.shape),
            -settings.target_noise_clip,
            settings.target_noise_clip,
        )
        actions = np.clip(actions + noise, -1.0, 1.0)
        q1, _ = critic_pass(next_graph, actions, target.critics[0])
        q2, _ = critic_pass(next_graph, actions, target.critics[1])
        targets[index] = transition.reward + settings.gamma * min(q1, q2)
    return targets


class TD3Trainer:
    """Twin-critic deterministic policy gradient on the scene-graph MDP."""

    def __init__(
        self,
        config: ExperimentConfig,
        seed: int = 0,
        layout: Optional[str] = None,
        weights: Optional[PolicyWeights] = None,
    ) -> None:
        self.config = config
        self.settings = config.training
        self.seed = seed
        self.squash = config.network.squash
        self.online = weights.copy() if weights is not None else init_policy(config.network, seed)
        self.target = self.online.copy()
        lr = self.settings.learning_rate
        self.actor_optimizer = Adam(self.online.actor.tensors(), lr)
        self.critic_optimizers = [Adam(critic.tensors(), lr) for critic in self.online.critics]
        self.buffer = ReplayBuffer(self.settings.buffer_size, seed)
        self.env = TrainingEnv(config, seed, layout)
        self.updates = 0
        self._explore = derive_rng(seed, "explore")
        self._target_noise = derive_rng(seed, "target_noise")

    def act(self, graph, step: int) -> np.ndarray:
        """Normalised exploration actions for every vertex of ``graph``."""
        if graph.num_vertices == 0:
            return np.zeros(0)
        if step < self.settings.start_steps:
            return self._explore.uniform(-1.0, 1.0, size=graph.num_vertices)
        actions, _ = actor_pass(graph, self.online.actor, self.squash)
        noise = self._explore.normal(0.0, self.settings.exploration_noise, size=actions.shape)
        return np.clip(actions + noise, -1.0, 1.0)

    def critic_update(self, batch: Sequence[Transition]) -> float:
        targets = critic_target(batch, self.target, self.settings, self._target_noise, self.squash)
        total = 0.0
        for critic, optimizer in zip(self.online.critics, self.critic_optimizers):
            grads = critic.zeros_like().tensors()
            loss = 0.0
            for transition, y in zip(batch, targets):
                q, cache = critic_pass(transition.graph, transition.actions, critic)
                loss += (q - y) ** 2 / len(batch)
                step_grads = backward(cache, 2.0 * (q - y) / len(batch), critic).weights.tensors()
                for name in grads:
                    grads[name] += step_grads[name]
            optimizer.step(grads)
            total += loss
        return total

    def actor_update(self, batch: Sequence[Transition]) -> float:
        actor = self.online.actor
        critic = self.online.critics[0]
        grads = actor.zeros_like().tensors()
        loss = 0.0
        for transition in batch:
            actions, actor_cache = actor_pass(transition.graph, actor, self.squash)
            q, critic_cache = critic_pass(transition.graph, actions, critic)
            loss -= q / len(batch)
            grad_actions = backward(critic_cache, -1.0 / len(batch), critic).inputs["action"]
            step_grads = backward(actor_cache, grad_actions, actor).weights.tensors()
            for name in grads:
                grads[name] += step_grads[name]
        self.actor_optimizer.step(grads)
        return loss

    def update(self, batch: Sequence[Transition], step: int) -> Tuple[float, Optional[float]]:
        self.updates += 1
        critic_loss = self.critic_update(batch)
        actor_loss = None
        if self.updates % self.settings.policy_delay == 0:
            actor_loss = self.actor_update(batch)
            soft_update(self.target.tensors(), self.online.tensors(), self.settings.tau)
        if not math.isfinite(critic_loss) or (actor_loss is not None and not math.isfinite(actor_loss)):
            raise TrainingDivergedError(step, critic_loss, actor_loss)
        return critic_loss, actor_loss

    def evaluate(self) -> float:
        settings = self.settings
        scenario = replace(
            self.config.scenario,
            layout=self.env.layout_kind,
            controller="rl",
            demand=settings.eval_demand,
            duration=settings.eval_duration,
            seed=derive_seed(self.seed, "eval") % 2**32,
            weights=None,
        )
        config = replace(self.config, scenario=scenario)
        record = run_episode(config, controller=PolicyController(self.online.actor, config))
        return record.flow_rate

    def train(
        self,
        log_path: Optional[Union[str, Path]] = None,
        show_progress: bool = False,
    ) -> TrainingResult:
        settings = self.settings
        log = TrainingLog(log_path)
        graph = self.env.reset()
        episode_return = 0.0
        critic_loss: Optional[float] = None
        actor_loss: Optional[float] = None
        progress = tqdm(total=settings.total_steps, desc="Training", disable=not show_progress)
        for step in range(settings.total_steps):
            actions = self.act(graph, step)
            outcome = self.env.step(to_acceleration(actions, self.config.limits))
            if graph.num_vertices:
                self.buffer.add(
                    Transition(
                        graph=graph,
                        actions=actions,
                        reward=outcome.reward,
                        next_graph=outcome.graph,
                        terminal=outcome.terminal,
                        matching=match_vertices(graph, outcome.graph),
                    )
                )
            episode_return += outcome.reward

            ready = step >= settings.start_steps and len(self.buffer) >= settings.batch_size
            if ready and step % settings.train_every == 0:
                critic_loss, latest_actor = self.update(self.buffer.sample(settings.batch_size), step)
                if latest_actor is not None:
                    actor_loss = latest_actor

            if outcome.terminal or outcome.truncated:
                log.append(
                    LogRow(step + 1, self.env.episode, episode_return, critic_loss, actor_loss)
                )
                logger.info(
                    "Episode %d ended at step %d with return %.3f", self.env.episode, step + 1, episode_return
                )
                episode_return = 0.0
                graph = self.env.reset()
            else:
                graph = outcome.graph

            if settings.eval_interval and (step + 1) % settings.eval_interval == 0:
                flow = self.evaluate()
                log.append(
                    LogRow(step + 1, self.env.episode, None, critic_loss, actor_loss, flow)
                )
                logger.info("Evaluation at step %d: flow rate %.3f veh/s", step + 1, flow)
            progress.update(1)
        progress.close()
        return TrainingResult(
            weights=self.online.copy(),
            rows=tuple(log.rows),
            episodes=self.env.episode + 1,
            updates=self.updates,
        )


def td3_train(
    config: ExperimentConfig,
    seed: int = 0,
    layout: Optional[str] = None,
    warm_start: Optional[Union[str, Path, PolicyWeights]] = None,
    log_path: Optional[Union[str, Path]] = None,
    show_progress: bool = False,
) -> TrainingResult:
    """Train a policy from scratch or from ``warm_start`` weights."""
    weights = None
    if isinstance(warm_start, PolicyWeights):
        weights = warm_start
    elif warm_start is not None:
        weights = load_weights(warm_start, config.network)
        logger.info("Warm start from %s", warm_start)
    trainer = TD3Trainer(config, seed=seed, layout=layout, weights=weights)
    return trainer.train(log_path=log_path, show_progress=show_progress)

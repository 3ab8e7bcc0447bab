import csv
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from aimgraph.config.loader import ExperimentConfig
from aimgraph.core.types import NetworkSettings, ScenarioConfig, TrainingSettings
from aimgraph.dynamics import VehicleState, World
from aimgraph.geometry import build_layout
from aimgraph.policy import actor_pass, critic_forward, init_policy
from aimgraph.scenegraph import SceneGraph
from aimgraph.training import (
    Adam,
    ReplayBuffer,
    RewardSpec,
    TD3Trainer,
    TrainingEnv,
    Transition,
    compute_reward,
    critic_target,
    match_vertices,
    soft_update,
)
from aimgraph.training.td3 import LOG_COLUMNS, LogRow, TrainingLog

SMALL = NetworkSettings(vertex_hidden=6, edge_hidden=4, conv_hidden=5)


def small_graph(rng: np.random.Generator, count: int = 3, ids=None) -> SceneGraph:
    edges = [(0, 1, 1), (1, 0, 1), (1, 2, 0)] if count >= 3 else []
    return SceneGraph(
        vehicle_ids=tuple(ids if ids is not None else range(count)),
        vertex_features=rng.normal(size=(count, 3)),
        src=np.array([edge[0] for edge in edges], dtype=np.int64),
        dst=np.array([edge[1] for edge in edges], dtype=np.int64),
        edge_types=np.array([edge[2] for edge in edges], dtype=np.int64),
        edge_features=rng.normal(size=(len(edges), 2)),
        normalized=True,
    )


def transition(rng: np.random.Generator, reward: float, terminal: bool = False) -> Transition:
    graph = small_graph(rng)
    next_graph = small_graph(rng)
    return Transition(
        graph=graph,
        actions=rng.uniform(-1.0, 1.0, size=graph.num_vertices),
        reward=reward,
        next_graph=next_graph,
        terminal=terminal,
        matching=match_vertices(graph, next_graph),
    )


class RewardTests(unittest.TestCase):
    def setUp(self) -> None:
        self.world = World(
            time=0.0,
            layout=build_layout("M"),
            vehicles=(
                VehicleState(id=0, route_id="W_through", s=30.0, v=5.0),
                VehicleState(id=1, route_id="S_through", s=30.0, v=10.0),
            ),
        )

    def test_flow_and_action_terms(self) -> None:
        reward = compute_reward(self.world, {0: 3.0, 1: 0.0}, False, v0=10.0)
        self.assertAlmostEqual(reward, 0.75 - 0.1 * 0.5)

    def test_collision_penalty(self) -> None:
        reward = compute_reward(self.world, {0: 3.0, 1: 0.0}, True, v0=10.0)
        self.assertAlmostEqual(reward, 0.7 - 10.0)

    def test_custom_weights(self) -> None:
        spec = RewardSpec(w_flow=2.0, w_act=0.0, w_coll=1.0)
        self.assertAlmostEqual(compute_reward(self.world, {1: -5.0}, False, 10.0, spec), 2.0)

    def test_requires_actions(self) -> None:
        with self.assertRaises(ValueError):
            compute_reward(self.world, {}, False, v0=10.0)

    def test_negative_weight_rejected(self) -> None:
        with self.assertRaises(ValueError):
            RewardSpec(w_act=-1.0)


class ReplayTests(unittest.TestCase):
    def test_fifo_eviction(self) -> None:
        rng = np.random.default_rng(0)
        buffer = ReplayBuffer(capacity=3, seed=1)
        for reward in range(5):
            buffer.add(transition(rng, float(reward)))
        self.assertEqual(len(buffer), 3)
        self.assertEqual({item.reward for item in buffer.sample(3)}, {2.0, 3.0, 4.0})

    def test_sampling_is_seeded(self) -> None:
        rng = np.random.default_rng(0)
        items = [transition(rng, float(reward)) for reward in range(10)]
        first, second = ReplayBuffer(10, seed=4), ReplayBuffer(10, seed=4)
        for item in items:
            first.add(item)
            second.add(item)
        self.assertEqual(
            [item.reward for item in first.sample(5)], [item.reward for item in second.sample(5)]
        )

    def test_empty_buffer(self) -> None:
        with self.assertRaises(ValueError):
            ReplayBuffer(4).sample(1)
        with self.assertRaises(ValueError):
            ReplayBuffer(0)

    def test_action_shape_checked(self) -> None:
        rng = np.random.default_rng(0)
        graph = small_graph(rng)
        with self.assertRaises(ValueError):
            Transition(graph=graph, actions=np.zeros(2), reward=0.0, next_graph=graph, terminal=False)

    def test_match_vertices(self) -> None:
        rng = np.random.default_rng(0)
        before = small_graph(rng, ids=(4, 7, 9))
        after = small_graph(rng, ids=(7, 9, 12))
        self.assertEqual(match_vertices(before, after), {7: (1, 0), 9: (2, 1)})


class CriticTargetTests(unittest.TestCase):
    def setUp(self) -> None:
        self.target = init_policy(SMALL, seed=3)
        self.rng = np.random.default_rng(5)

    def test_terminal_regresses_on_reward(self) -> None:
        batch = [transition(self.rng, 1.5, terminal=True)]
        targets = critic_target(batch, self.target, TrainingSettings(), np.random.default_rng(0))
        np.testing.assert_allclose(targets, [1.5])

    def test_zero_discount(self) -> None:
        batch = [transition(self.rng, -0.4), transition(self.rng, 0.2)]
        settings = TrainingSettings(gamma=0.0)
        np.testing.assert_allclose(
            critic_target(batch, self.target, settings, np.random.default_rng(0)), [-0.4, 0.2]
        )

    def test_matches_scalar_recomputation(self) -> None:
        batch = [transition(self.rng, 0.3)]
        settings = TrainingSettings(gamma=0.9, target_noise=0.0)
        next_graph = batch[0].next_graph
        actions, _ = actor_pass(next_graph, self.target.actor)
        q = min(critic_forward(next_graph, actions, critic) for critic in self.target.critics)
        targets = critic_target(batch, self.target, settings, np.random.default_rng(0))
        self.assertAlmostEqual(targets[0], 0.3 + 0.9 * q, places=12)

    def test_empty_successor(self) -> None:
        graph = small_graph(self.rng)
        empty = small_graph(self.rng, count=0)
        item = Transition(graph=graph, actions=np.zeros(3), reward=0.8, next_graph=empty, terminal=False)
        targets = critic_target([item], self.target, TrainingSettings(), np.random.default_rng(0))
        np.testing.assert_allclose(targets, [0.8])


class OptimiserTests(unittest.TestCase):
    def test_adam_descends_quadratic(self) -> None:
        params = {"x": np.zeros(3)}
        optimizer = Adam(params, learning_rate=0.05)
        for _ in range(1000):
            optimizer.step({"x": 2.0 * (params["x"] - 3.0)})
        self.assertLess(float(np.sum((params["x"] - 3.0) ** 2)), 0.09)

    def test_soft_update(self) -> None:
        target = {"w": np.zeros(2)}
        soft_update(target, {"w": np.ones(2)}, 0.25)
        np.testing.assert_allclose(target["w"], [0.25, 0.25])


class TrainerTests(unittest.TestCase):
    def _config(self, **training) -> ExperimentConfig:
        settings = replace(TrainingSettings(), eval_interval=0, **training)
        return ExperimentConfig(
            scenario=ScenarioConfig(layout="S", controller="rl"),
            network=SMALL,
            training=settings,
        )

    def test_critic_loss_decreases_on_fixed_batch(self) -> None:
        config = self._config(gamma=0.0, target_noise=0.0, learning_rate=1e-3)
        trainer = TD3Trainer(config, seed=0)
        rng = np.random.default_rng(8)
        batch = [transition(rng, float(reward)) for reward in rng.uniform(-1.0, 1.0, size=8)]
        first = trainer.critic_update(batch)
        for _ in range(99):
            last = trainer.critic_update(batch)
        self.assertLess(last, first)

    def test_zero_steps_returns_initial_weights(self) -> None:
        config = self._config(total_steps=0)
        result = TD3Trainer(config, seed=7).train()
        self.assertTrue(result.weights.equals(init_policy(SMALL, seed=7)))
        self.assertEqual(result.updates, 0)
        self.assertEqual(result.rows, ())

    def test_short_run_is_deterministic(self) -> None:
        config = self._config(
            total_steps=180,
            start_steps=40,
            batch_size=8,
            episode_duration=6.0,
            demand_low=0.3,
            demand_high=0.4,
        )
        with tempfile.TemporaryDirectory() as temp_dir:
            log_path = Path(temp_dir) / "training_log.csv"
            first = TD3Trainer(config, seed=2).train(log_path=log_path)
            with log_path.open(newline="", encoding="utf-8") as handle:
                rows = list(csv.DictReader(handle))
        second = TD3Trainer(config, seed=2).train()
        self.assertTrue(first.weights.equals(second.weights))
        self.assertEqual(first.rows, second.rows)
        self.assertGreater(first.updates, 0)
        self.assertEqual(len(rows), len(first.rows))
        self.assertEqual(tuple(rows[0].keys()), LOG_COLUMNS)


class EnvTests(unittest.TestCase):
    def test_step_requires_reset(self) -> None:
        env = TrainingEnv(ExperimentConfig(scenario=ScenarioConfig(layout="S")), seed=0)
        with self.assertRaises(RuntimeError):
            env.step(np.zeros(0))

    def test_action_count_checked(self) -> None:
        env = TrainingEnv(ExperimentConfig(scenario=ScenarioConfig(layout="S")), seed=0)
        graph = env.reset()
        with self.assertRaises(ValueError):
            env.step(np.zeros(graph.num_vertices + 1))

    def test_episode_truncates_at_time_limit(self) -> None:
        training = replace(TrainingSettings(), episode_duration=1.0)
        env = TrainingEnv(ExperimentConfig(scenario=ScenarioConfig(layout="S"), training=training), seed=0)
        graph = env.reset()
        outcome = None
        for _ in range(10):
            outcome = env.step(np.full(graph.num_vertices, -1.0))
            graph = outcome.graph
        self.assertTrue(outcome.truncated)
        self.assertFalse(outcome.terminal)


class TrainingLogTests(unittest.TestCase):
    def test_csv_row_format(self) -> None:
        row = LogRow(step=10, episode=1, episode_return=0.5)
        self.assertEqual(row.as_csv()["critic_loss"], "")
        self.assertEqual(row.as_csv()["return"], "0.5")
        log = TrainingLog()
        log.append(row)
        self.assertEqual(log.rows, [row])


if __name__ == "__main__":
    unittest.main()

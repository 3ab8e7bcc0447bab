import os
import statistics
import unittest
from dataclasses import replace
from typing import Optional

from aimgraph.baselines.registry import build_controller
from aimgraph.config.loader import ExperimentConfig, apply_overrides
from aimgraph.core.types import LAYOUT_KINDS, ProtocolSettings
from aimgraph.harness import EpisodeRunner, baseline_protocol, crossval_protocol, flow_bins, run_episode
from aimgraph.training.td3 import td3_train

ACCEPTANCE_ENV = "AIMGRAPH_ACCEPTANCE"
TRAINING_ENV = "AIMGRAPH_ACCEPTANCE_TRAINING"
WEIGHTS_ENV = "AIMGRAPH_ACCEPTANCE_WEIGHTS"


def protocol_config(runs: int, demand_low: float, demand_high: float) -> ExperimentConfig:
    settings = replace(ProtocolSettings(), runs=runs, demand_low=demand_low, demand_high=demand_high)
    return replace(ExperimentConfig(), protocols=settings)


def trained_weights() -> Optional[str]:
    path = os.environ.get(WEIGHTS_ENV)
    return path if path and os.path.exists(path) else None


@unittest.skipUnless(os.environ.get(ACCEPTANCE_ENV) == "1", f"set {ACCEPTANCE_ENV}=1 to run")
class BaselineAcceptanceTests(unittest.TestCase):
    """Long protocol runs; minutes of CPU time each."""

    def setUp(self) -> None:
        self.runner = EpisodeRunner(parallel=0, show_progress=False)

    def test_signal_duration_plateau(self) -> None:
        result = baseline_protocol(protocol_config(30, 0.15, 0.15), self.runner, layout="L", controllers=("tl",))
        median = result.summary()["controllers"]["tl"]["duration"]["median"]
        self.assertTrue(20.0 <= median <= 30.0, median)

    def test_fifo_stops_most_vehicles(self) -> None:
        result = baseline_protocol(
            protocol_config(100, 0.05, 0.3), self.runner, layout="L", controllers=("fifo", "efifo")
        )
        stops = {name: result.summary()["controllers"][name]["stop_percentage"]["median"] for name in ("fifo", "efifo")}
        self.assertTrue(65.0 <= stops["fifo"] <= 95.0, stops)
        self.assertLess(stops["efifo"], stops["fifo"])

    def test_reservation_capacity(self) -> None:
        result = baseline_protocol(protocol_config(100, 0.05, 0.5), self.runner, layout="L", controllers=("efifo",))
        bins = flow_bins(result.records["efifo"], bin_width=0.1, min_count=5)
        top = bins[-1]
        capacity = 0.5 * (top["flow_low"] + top["flow_high"])
        self.assertTrue(0.65 <= capacity <= 0.95, capacity)

    def test_free_flow_duration(self) -> None:
        result = baseline_protocol(protocol_config(30, 0.05, 0.05), self.runner, layout="L", controllers=("efifo",))
        median = result.summary()["controllers"]["efifo"]["duration"]["median"]
        self.assertAlmostEqual(median, 12.0, delta=3.0)

    def test_rule_based_controllers_never_collide(self) -> None:
        config = protocol_config(20, 0.05, 0.3)
        for layout in LAYOUT_KINDS:
            result = baseline_protocol(config, self.runner, layout=layout)
            for name in result.controllers:
                records = result.records[name]
                self.assertEqual(sum(record.collided for record in records), 0, f"{name} on {layout}")
                self.assertTrue(all(record.conserved for record in records), f"{name} on {layout}")


@unittest.skipUnless(os.environ.get(ACCEPTANCE_ENV) == "1", f"set {ACCEPTANCE_ENV}=1 to run")
@unittest.skipUnless(trained_weights(), f"set {WEIGHTS_ENV} to an M-trained weights file")
class PolicyAcceptanceTests(unittest.TestCase):
    def setUp(self) -> None:
        self.weights = trained_weights()
        self.runner = EpisodeRunner(parallel=0, show_progress=False)

    def test_free_flow_duration(self) -> None:
        result = baseline_protocol(
            protocol_config(30, 0.05, 0.05), self.runner, layout="L", controllers=("rl",), weights=self.weights
        )
        median = result.summary()["controllers"]["rl"]["duration"]["median"]
        self.assertAlmostEqual(median, 12.0, delta=3.0)

    def test_smaller_layout_does_not_add_collisions(self) -> None:
        result = crossval_protocol(ExperimentConfig(), {"M": self.weights}, self.runner, scenarios=30)
        matrix = result.collision_matrix()
        self.assertEqual((len(matrix), len(matrix[0])), (1, 4))
        row = dict(zip(result.layouts, matrix[0]))
        self.assertLessEqual(row["S"], row["M"])


@unittest.skipUnless(os.environ.get(ACCEPTANCE_ENV) == "1", f"set {ACCEPTANCE_ENV}=1 to run")
@unittest.skipUnless(os.environ.get(TRAINING_ENV) == "1", f"set {TRAINING_ENV}=1 to run (hours)")
class TrainingAcceptanceTests(unittest.TestCase):
    def test_policy_matches_priority_rules(self) -> None:
        config = apply_overrides(ExperimentConfig(), layout="M", demand=0.3, duration=100.0)
        passed = 0
        for seed in range(3):
            weights = td3_train(config, seed=seed, layout="M").weights
            learned, rules = [], []
            for episode in range(10):
                scenario = replace(config.scenario, seed=1000 + episode)
                learned.append(
                    run_episode(
                        replace(config, scenario=replace(scenario, controller="rl")),
                        controller=build_controller("rl", config, weights=weights),
                    )
                )
                rules.append(run_episode(replace(config, scenario=replace(scenario, controller="pr"))))
            spawned = sum(record.spawned for record in learned)
            collided = sum(record.collided for record in learned)
            collision_rate = 100.0 * collided / spawned if spawned else 0.0
            flow = statistics.median(record.flow_rate for record in learned)
            baseline = statistics.median(record.flow_rate for record in rules)
            if collision_rate < 5.0 and flow >= baseline:
                passed += 1
        self.assertGreaterEqual(passed, 2)


if __name__ == "__main__":
    unittest.main()

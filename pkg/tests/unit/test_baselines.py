import unittest

import numpy as np

from aimgraph.baselines.fifo import EnhancedFifoController, FifoController
from aimgraph.baselines.priority import PriorityRuleController, priority_rank
from aimgraph.baselines.registry import BASELINE_KINDS, build_controller
from aimgraph.baselines.reservation import ReservationLedger
from aimgraph.baselines.signals import (
    SignalColor,
    SignalController,
    build_signal_plan,
    group_state,
    signal_state,
    yellow_should_stop,
)
from aimgraph.config.loader import ExperimentConfig
from aimgraph.core.types import LAYOUT_KINDS
from aimgraph.dynamics import VehicleState, World
from aimgraph.geometry import build_layout


def crossing_pair(s_main: float = 60.0, s_side: float = 60.0) -> World:
    return World(
        time=0.0,
        layout=build_layout("M"),
        vehicles=(
            VehicleState(id=0, route_id="W_through", s=s_main, v=8.0),
            VehicleState(id=1, route_id="S_through", s=s_side, v=8.0),
        ),
    )


class SignalPlanTests(unittest.TestCase):
    def test_cycle_lengths(self) -> None:
        expected = {"S": 40.0, "M": 40.0, "L": 54.0, "XL": 68.0}
        for kind in LAYOUT_KINDS:
            self.assertEqual(build_signal_plan(build_layout(kind)).cycle_length, expected[kind], kind)

    def test_exactly_one_group_released(self) -> None:
        for kind in LAYOUT_KINDS:
            plan = build_signal_plan(build_layout(kind))
            for t in np.arange(0.0, 2 * plan.cycle_length, 0.5):
                released = [
                    phase.group
                    for phase in plan.phases
                    if group_state(plan, float(t), phase.group) is not SignalColor.RED
                ]
                self.assertEqual(len(released), 1, f"{kind} at t={t}")

    def test_phase_sequence(self) -> None:
        plan = build_signal_plan(build_layout("M"))
        self.assertIs(signal_state(plan, 0.0, "W_in"), SignalColor.GREEN)
        self.assertIs(signal_state(plan, 25.0, "W_in"), SignalColor.YELLOW)
        self.assertIs(signal_state(plan, 26.0, "W_in"), SignalColor.RED)
        self.assertIs(signal_state(plan, 26.0, "S_in"), SignalColor.GREEN)
        self.assertIs(signal_state(plan, 39.0, "S_in"), SignalColor.YELLOW)
        self.assertIs(signal_state(plan, 40.0, "W_in"), SignalColor.GREEN)

    def test_negative_time_rejected(self) -> None:
        plan = build_signal_plan(build_layout("M"))
        with self.assertRaises(ValueError):
            signal_state(plan, -1.0, "W_in")

    def test_yellow_decision(self) -> None:
        route = build_layout("M").route("W_through")
        far = VehicleState(id=0, route_id="W_through", s=42.5, v=10.0)
        near = VehicleState(id=0, route_id="W_through", s=52.5, v=10.0)
        self.assertTrue(yellow_should_stop(far, route, comfortable_decel=2.0))
        self.assertFalse(yellow_should_stop(near, route, comfortable_decel=2.0))

    def test_red_approach_slows_down(self) -> None:
        controller = SignalController()
        layout = build_layout("M")
        controller.reset(layout)
        world = World(
            time=5.0,
            layout=layout,
            vehicles=(
                VehicleState(id=0, route_id="W_through", s=60.0, v=8.0),
                VehicleState(id=1, route_id="S_through", s=60.0, v=8.0),
            ),
        )
        accelerations = controller.accelerations(world)
        self.assertGreaterEqual(accelerations[0], 0.0)
        self.assertLess(accelerations[1], 0.0)

    def test_crossing_protected_lefts_go_one_at_a_time(self) -> None:
        layout = build_layout("XL")
        self.assertIsNotNone(layout.crossing("W_left", "E_left"))
        controller = SignalController()
        controller.reset(layout)
        halt = layout.route("W_left").halt_s
        world = World(
            time=27.0,
            layout=layout,
            vehicles=(
                VehicleState(id=0, route_id="W_left", s=halt - 10.0, v=8.0),
                VehicleState(id=1, route_id="E_left", s=halt - 20.0, v=8.0),
            ),
        )
        self.assertIs(signal_state(controller.plan, 27.0, "W_in_left"), SignalColor.GREEN)
        accelerations = controller.accelerations(world)
        self.assertGreaterEqual(accelerations[0], 0.0)
        self.assertLess(accelerations[1], 0.0)


class ReservationTests(unittest.TestCase):
    def test_grant_hold_release(self) -> None:
        layout = build_layout("M")
        ledger = ReservationLedger(layout, clearance_margin=1.5)
        state = VehicleState(id=0, route_id="W_through", s=60.0, v=8.0)
        ledger.stamp(state, 1.0)
        self.assertEqual(ledger.stamp(state, 2.0), (1.0, 0))
        ledger.grant(state, 1.0)
        self.assertTrue(ledger.holds(0, "S_through"))
        moved = VehicleState(id=0, route_id="W_through", s=92.0, v=8.0)
        ledger.release_cleared(World(time=2.0, layout=layout, vehicles=(moved,)))
        self.assertFalse(ledger.holds(0, "S_through"))
        ledger.release_cleared(World(time=3.0, layout=layout))
        self.assertFalse(ledger.has_stamp(0))


class FifoTests(unittest.TestCase):
    def test_earlier_arrival_goes_first(self) -> None:
        controller = FifoController()
        world = crossing_pair()
        controller.reset(world.layout)
        accelerations = controller.accelerations(world)
        self.assertTrue(controller.ledger.is_granted(0))
        self.assertFalse(controller.ledger.is_granted(1))
        self.assertLess(accelerations[1], 0.0)

    def test_nearer_vehicle_goes_first(self) -> None:
        controller = EnhancedFifoController()
        world = crossing_pair(s_main=50.0, s_side=60.0)
        controller.reset(world.layout)
        controller.accelerations(world)
        self.assertTrue(controller.ledger.is_granted(1))
        self.assertFalse(controller.ledger.is_granted(0))
        self.assertEqual(controller.ledger.violations(), [])


class PriorityTests(unittest.TestCase):
    def test_ranks(self) -> None:
        layout = build_layout("M")
        self.assertEqual(priority_rank(layout.route("W_through")), 0)
        self.assertEqual(priority_rank(layout.route("W_left")), 1)
        self.assertEqual(priority_rank(layout.route("S_right")), 2)
        self.assertEqual(priority_rank(layout.route("S_left")), 3)

    def test_side_road_yields_to_committed_main(self) -> None:
        controller = PriorityRuleController()
        world = crossing_pair()
        controller.reset(world.layout)
        accelerations = controller.accelerations(world)
        self.assertTrue(controller.ledger.is_granted(0))
        self.assertFalse(controller.ledger.is_granted(1))
        self.assertLess(accelerations[1], 0.0)


class RegistryTests(unittest.TestCase):
    def test_builds_every_baseline(self) -> None:
        config = ExperimentConfig()
        for kind in BASELINE_KINDS:
            controller = build_controller(kind, config)
            self.assertEqual(controller.name, kind)
            self.assertFalse(controller.learned)

    def test_unknown_kind(self) -> None:
        with self.assertRaises(RuntimeError):
            build_controller("roundabout", ExperimentConfig())

    def test_policy_requires_weights(self) -> None:
        with self.assertRaises(RuntimeError):
            build_controller("rl", ExperimentConfig())


if __name__ == "__main__":
    unittest.main()

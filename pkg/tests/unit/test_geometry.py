import math
import unittest

import numpy as np
import shapely
from shapely.geometry import LineString

from aimgraph.geometry import (
    ArcSegment,
    ConflictKind,
    LayoutError,
    Pose,
    StraightSegment,
    build_layout,
    derive_connector,
    parse_layout,
    wrap_angle,
)
from aimgraph.core.types import LAYOUT_KINDS


class SegmentTests(unittest.TestCase):
    def test_wrap_angle_range(self) -> None:
        self.assertAlmostEqual(wrap_angle(3 * math.pi), math.pi)
        self.assertAlmostEqual(wrap_angle(-math.pi), math.pi)
        self.assertAlmostEqual(wrap_angle(0.5), 0.5)

    def test_straight_pose(self) -> None:
        segment = StraightSegment(Pose(1.0, 2.0, math.pi / 2), 10.0)
        pose = segment.pose_at(4.0)
        self.assertAlmostEqual(pose.x, 1.0)
        self.assertAlmostEqual(pose.y, 6.0)
        self.assertAlmostEqual(pose.heading, math.pi / 2)

    def test_arc_stays_on_circle(self) -> None:
        radius = 6.0
        arc = ArcSegment(Pose(0.0, 0.0, 0.0), radius * math.pi / 2, 1.0 / radius)
        centre = (0.0, radius)
        for u in np.linspace(0.0, arc.length, 11):
            pose = arc.pose_at(float(u))
            self.assertAlmostEqual(math.hypot(pose.x - centre[0], pose.y - centre[1]), radius, places=9)
            self.assertAlmostEqual(pose.heading, wrap_angle(u / radius), places=9)
        end = arc.end
        self.assertAlmostEqual(end.x, radius, places=9)
        self.assertAlmostEqual(end.y, radius, places=9)

    def test_vectorised_points_match_pose(self) -> None:
        arc = ArcSegment(Pose(3.0, -1.0, 0.3), 7.0, -0.2)
        u = np.array([0.0, 1.5, 7.0])
        points = arc.points(u)
        for index, value in enumerate(u):
            pose = arc.pose_at(float(value))
            self.assertAlmostEqual(points[index, 0], pose.x, places=12)
            self.assertAlmostEqual(points[index, 1], pose.y, places=12)


class ConnectorTests(unittest.TestCase):
    def test_straight_connector(self) -> None:
        segments = derive_connector(Pose(-8.0, -2.0, 0.0), Pose(8.0, -2.0, 0.0))
        self.assertEqual(len(segments), 1)
        self.assertAlmostEqual(segments[0].length, 16.0)

    def test_quarter_turn_connector(self) -> None:
        segments = derive_connector(Pose(-8.0, -2.0, 0.0), Pose(2.0, 8.0, math.pi / 2))
        self.assertEqual(len(segments), 1)
        self.assertIsInstance(segments[0], ArcSegment)
        self.assertAlmostEqual(segments[0].length, 5.0 * math.pi)

    def test_offset_parallel_lanes_rejected(self) -> None:
        with self.assertRaises(LayoutError):
            derive_connector(Pose(0.0, 0.0, 0.0), Pose(10.0, 3.0, 0.0))


class RouteTests(unittest.TestCase):
    def setUp(self) -> None:
        self.layout = build_layout("M")

    def test_route_marks(self) -> None:
        route = self.layout.route("W_through")
        self.assertAlmostEqual(route.halt_s, 75.0)
        self.assertAlmostEqual(route.control_entry_s, 25.0)
        self.assertAlmostEqual(route.box_exit_s, 91.0)
        self.assertAlmostEqual(route.complete_s, 111.0)
        self.assertEqual(route.lane_at(10.0), "W_in")
        self.assertEqual(route.lane_at(80.0), "W_through/box")
        self.assertEqual(route.lane_at(100.0), "E_out")
        self.assertFalse(route.in_control_zone(10.0))
        self.assertTrue(route.in_control_zone(30.0))

    def test_pose_at_spawn_and_halt(self) -> None:
        route = self.layout.route("W_through")
        spawn = route.pose_at(0.0)
        halt = route.pose_at(route.halt_s)
        self.assertAlmostEqual(spawn.x, -83.0)
        self.assertAlmostEqual(spawn.y, -2.0)
        self.assertAlmostEqual(halt.x, -8.0)

    def test_pose_out_of_range(self) -> None:
        route = self.layout.route("S_left")
        with self.assertRaises(ValueError):
            route.pose_at(-1.0)
        with self.assertRaises(ValueError):
            route.pose_at(route.length + 1.0)

    def test_pose_continuous_across_joints(self) -> None:
        route = self.layout.route("W_left")
        for joint in route.offsets[1:-1]:
            before = route.pose_at(joint - 1e-9)
            after = route.pose_at(joint + 1e-9)
            self.assertLess(math.hypot(before.x - after.x, before.y - after.y), 1e-6)

    def test_arc_length_matches_numeric_integration(self) -> None:
        route = build_layout("L").route("W_left")
        s_values = np.linspace(0.0, route.length, 200_001)
        points = route.points(s_values)
        travelled = float(np.sum(np.hypot(*np.diff(points, axis=0).T)))
        self.assertAlmostEqual(travelled, route.length, places=6)


class ConflictTests(unittest.TestCase):
    def test_perpendicular_through_intervals(self) -> None:
        layout = build_layout("M")
        relation = layout.crossing("W_through", "S_through")
        self.assertIsNotNone(relation)
        self.assertAlmostEqual(relation.interval_a.begin, 83.0, places=6)
        self.assertAlmostEqual(relation.interval_a.end, 87.0, places=6)
        self.assertAlmostEqual(relation.interval_b.begin, 79.0, places=6)
        self.assertAlmostEqual(relation.interval_b.end, 83.0, places=6)

    def test_parallel_opposing_through_routes_do_not_cross(self) -> None:
        layout = build_layout("M")
        self.assertIsNone(layout.conflict("W_through", "E_through"))

    def test_shared_approach_is_same_lane_prefix(self) -> None:
        layout = build_layout("M")
        relation = layout.conflict("W_through", "W_left")
        self.assertIsNotNone(relation)
        self.assertIs(relation.kind, ConflictKind.SAME_LANE_PREFIX)
        self.assertEqual(relation.interval_a.begin, 0.0)
        self.assertGreaterEqual(relation.interval_a.end, 75.0)
        self.assertIsNone(layout.crossing("W_through", "W_left"))

    def test_relations_are_symmetric(self) -> None:
        for kind in LAYOUT_KINDS:
            layout = build_layout(kind)
            for (route_a, route_b), relation in layout.conflicts.items():
                mirror = layout.conflict(route_b, route_a)
                self.assertIsNotNone(mirror, f"{kind}: {route_b}/{route_a}")
                self.assertIs(mirror.kind, relation.kind)
                self.assertEqual(mirror.interval_a, relation.interval_b)
                self.assertEqual(mirror.interval_b, relation.interval_a)

    def test_close_points_fall_inside_interval(self) -> None:
        layout = build_layout("L")
        threshold = 2.0 * 1.0
        for (route_a, route_b), relation in layout.conflicts.items():
            if not relation.is_crossing:
                continue
            a, b = layout.route(route_a), layout.route(route_b)
            s_values = np.arange(a.box_entry_s, a.box_exit_s, 0.05)
            distances = shapely.distance(shapely.points(a.points(s_values)), LineString(b.polyline))
            for s, distance in zip(s_values, distances):
                if distance <= threshold - 0.05:
                    self.assertTrue(
                        relation.interval_a.begin - 1e-6 <= s <= relation.interval_a.end + 1e-6,
                        f"{route_a}/{route_b} at s={s}",
                    )

    def test_larger_layouts_keep_smaller_crossings(self) -> None:
        for small, large in zip(LAYOUT_KINDS, LAYOUT_KINDS[1:]):
            small_layout, large_layout = build_layout(small), build_layout(large)
            for (route_a, route_b), relation in small_layout.conflicts.items():
                if relation.is_crossing:
                    self.assertIsNotNone(
                        large_layout.crossing(route_a, route_b), f"{small}->{large}: {route_a}/{route_b}"
                    )


class LayoutTests(unittest.TestCase):
    def test_all_kinds_build(self) -> None:
        for kind in LAYOUT_KINDS:
            layout = build_layout(kind)
            self.assertEqual(layout.kind, kind)
            self.assertTrue(layout.routes)
            for route in layout.routes:
                self.assertEqual(route.id.split("_")[-1], route.turn.value)
                self.assertGreater(route.complete_s, route.box_exit_s)
                self.assertLessEqual(route.complete_s, route.length)

    def test_unknown_kind(self) -> None:
        with self.assertRaises(LayoutError):
            build_layout("XXL")

    def test_unsupported_version(self) -> None:
        with self.assertRaises(LayoutError):
            parse_layout({"version": 99, "lanes": [], "routes": []})

    def test_to_dict_lists_routes(self) -> None:
        payload = build_layout("S").to_dict()
        self.assertEqual(payload["kind"], "S")
        self.assertIn("routes", payload)


if __name__ == "__main__":
    unittest.main()

import csv
import io
import json
import unittest

from aimgraph.harness import BaselineResult, CrossvalResult, MetricsRecord, SimulationResult
from aimgraph.reporting import CsvReport, JsonReport, MarkdownReport
from aimgraph.reporting.serializer import CSV_COLUMNS, records_to_dicts, records_to_json


def record(controller: str = "tl", flow_rate: float = 0.12, durations=(11.0, 13.0), **kwargs) -> MetricsRecord:
    values = dict(
        episode_id=f"M-{controller}-d0.1000-s0",
        layout="M",
        controller=controller,
        demand=0.1,
        seed=0,
        duration=100.0,
        flow_rate=flow_rate,
        durations=tuple(durations),
        stop_flags=tuple(index == 0 for index in range(len(durations))),
        spawned=len(durations),
        completed=len(durations),
        events={"spawn_suppressed": 1},
    )
    values.update(kwargs)
    return MetricsRecord(**values)


class CsvReportTests(unittest.TestCase):
    def test_one_row_per_episode(self) -> None:
        result = SimulationResult(records=(record(), record(durations=())))
        rows = list(csv.DictReader(io.StringIO(CsvReport().render(result))))
        self.assertEqual(len(rows), 2)
        self.assertEqual(tuple(rows[0].keys()), CSV_COLUMNS)
        self.assertEqual(rows[0]["median_duration"], "12.0")
        self.assertEqual(rows[0]["stop_percentage"], "50.0")
        self.assertEqual(rows[1]["median_duration"], "")
        self.assertEqual(rows[1]["stop_percentage"], "")


class JsonReportTests(unittest.TestCase):
    def test_summary(self) -> None:
        result = SimulationResult(records=(record(),))
        payload = json.loads(JsonReport().render(result))
        self.assertEqual(payload["protocol"], "simulate")
        self.assertEqual(payload["episodes"], ["M-tl-d0.1000-s0"])
        self.assertEqual(payload["duration"]["median"], 12.0)


class MarkdownReportTests(unittest.TestCase):
    def test_single_scenario(self) -> None:
        text = MarkdownReport().render(SimulationResult(records=(record(),)))
        self.assertIn("# aimgraph report: simulate", text)
        self.assertIn("- Collision rate (%): 0.00", text)

    def test_empty_statistics_render_as_missing(self) -> None:
        text = MarkdownReport().render(SimulationResult(records=(record(durations=()),)))
        self.assertIn("Duration (s): median n/a", text)

    def test_baselines_table(self) -> None:
        result = BaselineResult(
            layout="M",
            controllers=("tl", "efifo"),
            records={
                "tl": tuple(record("tl", 0.12) for _ in range(5)),
                "efifo": (record("efifo", 0.2),),
            },
        )
        text = MarkdownReport().render(result)
        self.assertIn("| tl | 0.120 |", text)
        self.assertIn("| 0.1-0.2 | 5 |", text)
        self.assertIn("No flow bin reached the minimum episode count.", text)

    def test_crossval_matrices(self) -> None:
        result = CrossvalResult(
            models=("S",),
            layouts=("S", "M"),
            records={
                ("S", "S"): (record("rl", 0.2, spawned=10, collided=1),),
                ("S", "M"): (record("rl", 0.3, spawned=10),),
            },
        )
        self.assertEqual(result.collision_matrix(), [[10.0, 0.0]])
        text = MarkdownReport().render(result)
        self.assertIn("| S | 10.00 | 0.00 |", text)
        self.assertIn("| S | 0.200 | 0.300 |", text)


class SerializerTests(unittest.TestCase):
    def test_vehicle_detail_is_optional(self) -> None:
        rows = records_to_dicts([record()])
        self.assertNotIn("durations", rows[0])
        self.assertEqual(rows[0]["events"], {"spawn_suppressed": 1})
        detailed = json.loads(records_to_json([record()]))
        self.assertEqual(detailed[0]["durations"], [11.0, 13.0])
        self.assertEqual(detailed[0]["stop_flags"], [True, False])


if __name__ == "__main__":
    unittest.main()

from __future__ import annotations

from typing import Any, Dict, List, Optional

from aimgraph.reporting.base import ProtocolOutput, ReportRenderer


class MarkdownReport(ReportRenderer):
    name = "markdown"

    def render(self, result: ProtocolOutput) -> str:
        summary = result.summary()
        protocol = summary.get("protocol", "simulate")
        lines = [f"# aimgraph report: {protocol}", ""]
        if protocol == "baselines":
            lines.extend(_baselines(summary))
        elif protocol == "crossval":
            lines.extend(_crossval(summary))
        else:
            lines.extend(_statistics("Episodes", summary))
        return "\n".join(lines)


def _baselines(summary: Dict[str, Any]) -> List[str]:
    lines = [f"Layout: {summary['layout']}", ""]
    lines.append("| Controller | Median flow (veh/s) | Median stops (%) | Median duration (s) | Collision rate (%) |")
    lines.append("| :--- | ---: | ---: | ---: | ---: |")
    for name, stats in summary["controllers"].items():
        lines.append(
            f"| {name} | {_fmt(stats['flow_rate']['median'])} | {_fmt(stats['stop_percentage']['median'], 1)}"
            f" | {_fmt(stats['duration']['median'], 1)} | {_fmt(stats['collision_rate'], 2)} |"
        )
    lines.append("")
    for name, stats in summary["controllers"].items():
        lines.append(f"## Duration over flow rate: {name}")
        lines.append("")
        bins = stats.get("duration_by_flow", [])
        if not bins:
            lines.append("No flow bin reached the minimum episode count.")
            lines.append("")
            continue
        lines.append("| Flow bin (veh/s) | Episodes | Q1 (s) | Median (s) | Q3 (s) |")
        lines.append("| :--- | ---: | ---: | ---: | ---: |")
        for item in bins:
            durations = item["durations"]
            lines.append(
                f"| {item['flow_low']:.1f}-{item['flow_high']:.1f} | {item['episodes']}"
                f" | {_fmt(durations['q1'], 1)} | {_fmt(durations['median'], 1)} | {_fmt(durations['q3'], 1)} |"
            )
        lines.append("")
    return lines


def _crossval(summary: Dict[str, Any]) -> List[str]:
    lines: List[str] = []
    layouts = summary["layouts"]
    for title, key, digits in (
        ("Collision percentage", "collision_percentage", 2),
        ("Average flow rate (veh/s)", "average_flow_rate", 3),
    ):
        lines.append(f"## {title}")
        lines.append("")
        lines.append("| Trained on \\ evaluated on | " + " | ".join(layouts) + " |")
        lines.append("| :--- |" + " ---: |" * len(layouts))
        for model, row in zip(summary["models"], summary[key]):
            lines.append(f"| {model} | " + " | ".join(_fmt(value, digits) for value in row) + " |")
        lines.append("")
    return lines


def _statistics(title: str, summary: Dict[str, Any]) -> List[str]:
    lines = [f"## {title}", "", f"- Episodes: {summary['episodes']}"]
    for key, label, digits in (
        ("flow_rate", "Flow rate (veh/s)", 3),
        ("stop_percentage", "Stopping vehicles (%)", 1),
        ("duration", "Duration (s)", 1),
    ):
        stats = summary[key]
        lines.append(
            f"- {label}: median {_fmt(stats['median'], digits)}"
            f" (IQR {_fmt(stats['q1'], digits)} to {_fmt(stats['q3'], digits)})"
        )
    lines.append(f"- Collision rate (%): {_fmt(summary['collision_rate'], 2)}")
    lines.append(f"- Safety violations: {summary['safety_violations']}")
    lines.append("")
    return lines


def _fmt(value: Optional[float], digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"

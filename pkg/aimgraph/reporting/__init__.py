"""Report generation."""

from aimgraph.reporting.base import ReportRenderer
from aimgraph.reporting.csv_report import CsvReport
from aimgraph.reporting.json_report import JsonReport
from aimgraph.reporting.markdown import MarkdownReport

__all__ = ["CsvReport", "JsonReport", "MarkdownReport", "ReportRenderer"]

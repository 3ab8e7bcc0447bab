from __future__ import annotations

import csv
import io

from aimgraph.reporting.base import ProtocolOutput, ReportRenderer
from aimgraph.reporting.serializer import CSV_COLUMNS, record_to_row


class CsvReport(ReportRenderer):
    """One row per episode; empty cells for undefined statistics."""

    name = "csv"

    def render(self, result: ProtocolOutput) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in result.all_records():
            row = record_to_row(record)
            writer.writerow({key: "" if value is None else value for key, value in row.items()})
        return buffer.getvalue()

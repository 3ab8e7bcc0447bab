from __future__ import annotations

import json

from aimgraph.reporting.base import ProtocolOutput, ReportRenderer


class JsonReport(ReportRenderer):
    name = "json"

    def render(self, result: ProtocolOutput) -> str:
        return json.dumps(result.summary(), ensure_ascii=False, indent=2)

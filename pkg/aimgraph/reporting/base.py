from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Protocol

from aimgraph.harness.metrics import MetricsRecord


class ProtocolOutput(Protocol):
    def summary(self) -> Dict[str, Any]: ...

    def all_records(self) -> List[MetricsRecord]: ...


class ReportRenderer(ABC):
    """Render protocol results into a report format."""

    name: str

    @abstractmethod
    def render(self, result: ProtocolOutput) -> str:
        """Return a report string."""

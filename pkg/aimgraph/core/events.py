from __future__ import annotations

import logging
from collections import Counter
from typing import Any, Dict, List, Optional

from aimgraph.core.types import EpisodeEvent

logger = logging.getLogger(__name__)


class EpisodeLog:
    """Append-only record of simulation anomalies for one episode."""

    def __init__(self) -> None:
        self._events: List[EpisodeEvent] = []
        self.time = 0.0

    def record(self, kind: str, vehicle_id: Optional[int] = None, **detail: Any) -> None:
        event = EpisodeEvent(time=self.time, kind=kind, vehicle_id=vehicle_id, detail=detail)
        self._events.append(event)
        logger.debug("t=%.2f %s vehicle=%s %s", self.time, kind, vehicle_id, detail)

    @property
    def events(self) -> List[EpisodeEvent]:
        return list(self._events)

    def counts(self) -> Dict[str, int]:
        return dict(Counter(event.kind for event in self._events))

    def __len__(self) -> int:
        return len(self._events)

from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Union

from aimgraph import __version__
from aimgraph.config.loader import ExperimentConfig

MANIFEST_VERSION = 1


@dataclass
class RunManifest:
    """Everything needed to rerun a command; loadable again via ``--config``."""

    command: str
    config: Dict[str, Any]
    seed: int
    argv: List[str] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    tool_version: str = __version__
    python_version: str = field(default_factory=platform.python_version)
    started_at: str = field(default_factory=lambda: _now())
    finished_at: str = ""
    wall_seconds: float = 0.0
    manifest_version: int = MANIFEST_VERSION

    @classmethod
    def start(cls, command: str, config: ExperimentConfig, argv: List[str]) -> "RunManifest":
        return cls(command=command, config=config.to_dict(), seed=config.scenario.seed, argv=list(argv))

    def add_artifact(self, name: str, path: Union[str, Path]) -> None:
        self.artifacts[name] = str(path)

    def finish(self, wall_seconds: float) -> None:
        self.finished_at = _now()
        self.wall_seconds = wall_seconds

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), ensure_ascii=False, indent=2, default=str), encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")

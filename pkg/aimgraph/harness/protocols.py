from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from aimgraph.config.loader import ConfigError, ExperimentConfig
from aimgraph.core.rng import derive_rng, derive_seed
from aimgraph.core.types import LAYOUT_KINDS
from aimgraph.harness.metrics import MetricsRecord, flow_bins, summarize
from aimgraph.harness.runner import EpisodeJob, EpisodeRunner

logger = logging.getLogger(__name__)

DEFAULT_BASELINES = ("tl", "fifo", "efifo", "pr")
_SEED_SPACE = 2**32


@dataclass(frozen=True)
class SimulationResult:
    """Episodes of a single scenario run from the command line."""

    records: Tuple[MetricsRecord, ...]

    def all_records(self) -> List[MetricsRecord]:
        return list(self.records)

    def summary(self) -> Dict[str, Any]:
        return {
            "protocol": "simulate",
            **summarize(self.records),
            "episodes": [record.episode_id for record in self.records],
        }


@dataclass(frozen=True)
class BaselineResult:
    layout: str
    controllers: Tuple[str, ...]
    records: Mapping[str, Tuple[MetricsRecord, ...]]
    bin_width: float = 0.1
    min_bin_count: int = 5

    def all_records(self) -> List[MetricsRecord]:
        return [record for name in self.controllers for record in self.records[name]]

    def summary(self) -> Dict[str, Any]:
        return {
            "protocol": "baselines",
            "layout": self.layout,
            "controllers": {
                name: {
                    **summarize(self.records[name]),
                    "duration_by_flow": flow_bins(self.records[name], self.bin_width, self.min_bin_count),
                }
                for name in self.controllers
            },
        }


@dataclass(frozen=True)
class CrossvalResult:
    """Every model evaluated on every layout; rows are models, columns layouts."""

    models: Tuple[str, ...]
    layouts: Tuple[str, ...]
    records: Mapping[Tuple[str, str], Tuple[MetricsRecord, ...]]

    def all_records(self) -> List[MetricsRecord]:
        return [record for model in self.models for layout in self.layouts for record in self.records[(model, layout)]]

    def collision_matrix(self) -> List[List[float]]:
        matrix = []
        for model in self.models:
            row = []
            for layout in self.layouts:
                records = self.records[(model, layout)]
                spawned = sum(record.spawned for record in records)
                collided = sum(record.collided for record in records)
                row.append(100.0 * collided / spawned if spawned else 0.0)
            matrix.append(row)
        return matrix

    def flow_matrix(self) -> List[List[float]]:
        return [
            [
                sum(record.flow_rate for record in self.records[(model, layout)])
                / max(len(self.records[(model, layout)]), 1)
                for layout in self.layouts
            ]
            for model in self.models
        ]

    def summary(self) -> Dict[str, Any]:
        return {
            "protocol": "crossval",
            "models": list(self.models),
            "layouts": list(self.layouts),
            "collision_percentage": self.collision_matrix(),
            "average_flow_rate": self.flow_matrix(),
        }


def protocol_scenarios(
    seed: int,
    count: int,
    demand_low: float,
    demand_high: float,
    *path: str,
) -> List[Tuple[float, int]]:
    """(demand, episode seed) pairs shared by every controller of a protocol."""
    rng = derive_rng(seed, "protocol", *path)
    demands = rng.uniform(demand_low, demand_high, size=count)
    return [
        (float(demand), derive_seed(seed, "episode", *path, index) % _SEED_SPACE)
        for index, demand in enumerate(demands)
    ]


def baseline_protocol(
    config: ExperimentConfig,
    runner: EpisodeRunner,
    layout: str = "L",
    controllers: Sequence[str] = DEFAULT_BASELINES,
    runs: Optional[int] = None,
    weights: Optional[str] = None,
) -> BaselineResult:
    """Controllers compared on matched demand samples of one layout.

    Every controller sees the same (demand, seed) pairs drawn uniformly
    from the protocol demand range.
    """
    settings = config.protocols
    layout = layout.upper()
    controllers = tuple(name.lower() for name in controllers)
    if "rl" in controllers:
        _require_weights({"rl": weights})
    scenarios = protocol_scenarios(
        config.scenario.seed,
        runs or settings.runs,
        settings.demand_low,
        settings.demand_high,
        "baselines",
        layout,
    )
    jobs = [
        EpisodeJob(
            config=_scenario(config, layout, name, demand, seed, settings.duration, weights),
            tag=name,
        )
        for name in controllers
        for demand, seed in scenarios
    ]
    logger.info("Baseline protocol on %s: %d episodes", layout, len(jobs))
    records = runner.run_sync(jobs, desc=f"baselines {layout}")
    grouped: Dict[str, List[MetricsRecord]] = {name: [] for name in controllers}
    for job, record in zip(jobs, records):
        grouped[job.tag].append(record)
    return BaselineResult(
        layout=layout,
        controllers=controllers,
        records={name: tuple(values) for name, values in grouped.items()},
        bin_width=settings.bin_width,
        min_bin_count=settings.min_bin_count,
    )


def crossval_protocol(
    config: ExperimentConfig,
    models: Mapping[str, str],
    runner: EpisodeRunner,
    scenarios: Optional[int] = None,
    layouts: Sequence[str] = LAYOUT_KINDS,
) -> CrossvalResult:
    """Every trained model evaluated on every layout under matched scenarios."""
    if not models:
        raise ConfigError("crossval: at least one model is required")
    _require_weights(models)
    settings = config.protocols
    count = scenarios or settings.crossval_scenarios
    model_names = tuple(models)
    layouts = tuple(layout.upper() for layout in layouts)
    jobs: List[EpisodeJob] = []
    for layout in layouts:
        shared = protocol_scenarios(
            config.scenario.seed,
            count,
            settings.crossval_demand_low,
            settings.crossval_demand_high,
            "crossval",
            layout,
        )
        for model in model_names:
            for demand, seed in shared:
                jobs.append(
                    EpisodeJob(
                        config=_scenario(config, layout, "rl", demand, seed, settings.duration, models[model]),
                        tag=f"{model}|{layout}",
                    )
                )
    logger.info("Cross-validation: %d models x %d layouts x %d scenarios", len(model_names), len(layouts), count)
    records = runner.run_sync(jobs, desc="crossval")
    grouped: Dict[Tuple[str, str], List[MetricsRecord]] = {
        (model, layout): [] for model in model_names for layout in layouts
    }
    for job, record in zip(jobs, records):
        model, layout = job.tag.split("|")
        grouped[(model, layout)].append(record)
    return CrossvalResult(
        models=model_names,
        layouts=layouts,
        records={key: tuple(values) for key, values in grouped.items()},
    )


def _scenario(
    config: ExperimentConfig,
    layout: str,
    controller: str,
    demand: float,
    seed: int,
    duration: float,
    weights: Optional[str],
) -> ExperimentConfig:
    return replace(
        config,
        scenario=replace(
            config.scenario,
            layout=layout,
            controller=controller,
            demand=demand,
            seed=seed,
            duration=duration,
            weights=weights if controller == "rl" else None,
        ),
    )


def _require_weights(models: Mapping[str, Optional[str]]) -> None:
    for name, path in models.items():
        if not path:
            raise ConfigError(f"{name}: a weights file is required")
        if not Path(path).exists():
            raise FileNotFoundError(f"Weights file not found for {name}: {path}")

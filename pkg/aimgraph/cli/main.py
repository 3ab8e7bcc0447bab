from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

from aimgraph.baselines.registry import build_controller
from aimgraph.cache.sqlite_cache import CacheStore
from aimgraph.cli.manifest import RunManifest
from aimgraph.config.loader import ConfigError, ExperimentConfig, apply_overrides, load_config
from aimgraph.core.types import CONTROLLER_KINDS, LAYOUT_KINDS
from aimgraph.geometry.layouts import LayoutError, build_layout
from aimgraph.harness.protocols import (
    DEFAULT_BASELINES,
    SimulationResult,
    baseline_protocol,
    crossval_protocol,
)
from aimgraph.harness.runner import EpisodeJob, EpisodeRunner
from aimgraph.harness.simulation import SafetyViolation, Simulation
from aimgraph.policy.serialization import (
    WeightsFormatError,
    WeightsShapeError,
    load_weights_with_settings,
    save_weights,
    weights_to_dict,
)
from aimgraph.reporting import CsvReport, JsonReport, MarkdownReport
from aimgraph.reporting.serializer import records_to_json
from aimgraph.scenegraph.graph import build_graph, dump_graph
from aimgraph.training.td3 import TrainingDivergedError, td3_train

logger = logging.getLogger("aimgraph")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SAFETY = 3
EXIT_DIVERGED = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aimgraph",
        description="Simulate, train and benchmark intersection controllers.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Run episodes of one scenario")
    _add_common(simulate)
    _add_scenario(simulate)
    _add_execution(simulate)
    simulate.add_argument("--episodes", type=int, default=1, help="Episodes with consecutive seeds")

    train = subparsers.add_parser("train", help="Train a graph policy with TD3")
    _add_common(train)
    train.add_argument("--layout", type=str.upper, default=None, help="Training layout")
    train.add_argument("--seed", type=int, default=None, help="Training seed")
    train.add_argument("--steps", type=int, default=None, help="Environment steps")
    train.add_argument("--weights", default=None, help="Warm-start weights file")

    benchmark = subparsers.add_parser("benchmark", help="Run an evaluation protocol")
    benchmark.add_argument("protocol", choices=["baselines", "crossval"])
    _add_common(benchmark)
    _add_execution(benchmark)
    benchmark.add_argument("--layout", type=str.upper, default=None, choices=LAYOUT_KINDS)
    benchmark.add_argument("--seed", type=int, default=None, help="Protocol seed")
    benchmark.add_argument(
        "--controllers",
        nargs="+",
        type=str.lower,
        default=list(DEFAULT_BASELINES),
        choices=CONTROLLER_KINDS,
        help="Controllers for the baseline protocol",
    )
    benchmark.add_argument("--runs", type=int, default=None, help="Episodes per controller or cell")
    benchmark.add_argument("--weights", default=None, help="Weights for the rl controller")
    benchmark.add_argument(
        "--models",
        nargs="+",
        default=[],
        metavar="LAYOUT=PATH",
        help="Trained models for cross-validation, e.g. S=runs/s/weights.bin",
    )

    export = subparsers.add_parser("export", help="Export layouts, weights or scene graphs as JSON")
    export.add_argument("artifact", choices=["layout", "weights", "graphs"])
    _add_common(export)
    _add_scenario(export)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    _configure_logging(args.log_level)

    handlers = {
        "simulate": cmd_simulate,
        "train": cmd_train,
        "benchmark": cmd_benchmark,
        "export": cmd_export,
    }
    try:
        return handlers[args.command](args, argv)
    except (ConfigError, LayoutError, WeightsFormatError, WeightsShapeError, FileNotFoundError) as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SafetyViolation as exc:
        print(f"Safety violation: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except TrainingDivergedError as exc:
        print(f"Training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except Exception as exc:
        logger.debug("Unhandled failure", exc_info=True)
        print(f"Failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def cmd_simulate(args: argparse.Namespace, argv: List[str]) -> int:
    config = _load(args)
    if config.scenario.controller == "rl" and not config.scenario.weights:
        raise ConfigError("scenario.weights: the rl controller needs a weights file")
    started = time.perf_counter()
    manifest = RunManifest.start("simulate", config, argv)
    scenario = config.scenario
    out = _output_dir(args, config, "simulate", f"{scenario.layout}-{scenario.controller}-s{scenario.seed}")

    jobs = [
        EpisodeJob(config=replace(config, scenario=replace(scenario, seed=scenario.seed + index)))
        for index in range(max(1, args.episodes))
    ]
    with _runner(args, config) as runner:
        records = runner.run_sync(jobs, desc="simulate")
    result = SimulationResult(records=tuple(records))

    _write(out / "metrics.csv", CsvReport().render(result), manifest)
    _write(out / "summary.json", JsonReport().render(result), manifest)
    _write(out / "episodes.json", records_to_json(records), manifest)
    _write(out / "report.md", MarkdownReport().render(result), manifest)
    _finish(manifest, out, started)

    for record in records:
        print(
            f"{record.episode_id}: flow {record.flow_rate:.3f} veh/s, "
            f"{record.completed}/{record.spawned} completed, {record.collided} collided"
        )
    print(f"Results written to: {out}")
    violations = [record.episode_id for record in records if record.safety_violation]
    if violations:
        raise SafetyViolation(", ".join(violations))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, argv: List[str]) -> int:
    config = _load(args, layout=args.layout, seed=args.seed)
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("training.total_steps: must be non-negative")
        config = replace(config, training=replace(config.training, total_steps=args.steps))
    started = time.perf_counter()
    manifest = RunManifest.start("train", config, argv)
    scenario = config.scenario
    out = _output_dir(args, config, "train", f"{scenario.layout}-s{scenario.seed}")
    if args.weights:
        manifest.add_artifact("warm_start", args.weights)

    log_path = out / "training_log.csv"
    result = td3_train(
        config,
        seed=scenario.seed,
        layout=scenario.layout,
        warm_start=args.weights,
        log_path=log_path,
        show_progress=not args.quiet,
    )
    manifest.add_artifact("training_log", log_path)
    weights_path = save_weights(result.weights, out / "weights.bin", config.network)
    manifest.add_artifact("weights", weights_path)
    _finish(manifest, out, started)
    print(f"Trained {result.episodes} episodes ({result.updates} updates) on {scenario.layout}")
    print(f"Weights written to: {weights_path}")
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace, argv: List[str]) -> int:
    config = _load(args, layout=args.layout, seed=args.seed)
    started = time.perf_counter()
    manifest = RunManifest.start(f"benchmark {args.protocol}", config, argv)
    violations: List[str] = []
    if args.protocol == "baselines":
        layout = config.scenario.layout
        out = _output_dir(args, config, "benchmark", f"baselines-{layout}-s{config.scenario.seed}")
        with _runner(args, config) as runner:
            result = baseline_protocol(
                config,
                runner,
                layout=layout,
                controllers=args.controllers,
                runs=args.runs,
                weights=args.weights,
            )
        violations = [record.episode_id for record in result.all_records() if record.safety_violation]
    else:
        models = _parse_models(args.models)
        out = _output_dir(args, config, "benchmark", f"crossval-s{config.scenario.seed}")
        for name, path in models.items():
            manifest.add_artifact(f"model_{name}", path)
        with _runner(args, config) as runner:
            result = crossval_protocol(config, models, runner, scenarios=args.runs)

    _write(out / f"{args.protocol}.csv", CsvReport().render(result), manifest)
    _write(out / "summary.json", JsonReport().render(result), manifest)
    _write(out / "report.md", MarkdownReport().render(result), manifest)
    _finish(manifest, out, started)
    print(f"Results written to: {out}")
    if violations:
        raise SafetyViolation(", ".join(violations))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, argv: List[str]) -> int:
    config = _load(args)
    scenario = config.scenario
    if args.artifact == "layout":
        text = json.dumps(build_layout(scenario.layout, config.vehicle.half_width).to_dict(), indent=2)
    elif args.artifact == "weights":
        if not scenario.weights:
            raise ConfigError("export weights: --weights is required")
        weights, network = load_weights_with_settings(scenario.weights)
        text = json.dumps(weights_to_dict(weights, network))
    else:
        text = _export_graphs(config)

    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        print(f"Exported {args.artifact} to: {path}")
    else:
        print(text)
    return EXIT_OK


def _export_graphs(config: ExperimentConfig) -> str:
    """One JSON line per step with the raw scene graph the controller saw."""
    controller = build_controller(config.scenario.controller, config, weights=config.scenario.weights)
    simulation = Simulation(config, controller)
    lines = []
    while not simulation.done:
        step = simulation.step()
        graph = build_graph(step.observed, config.graph, simulation.log)
        lines.append(json.dumps(dump_graph(graph, time=step.observed.time)))
    return "\n".join(lines)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="Experiment YAML or run manifest JSON")
    parser.add_argument("--output", default=None, help="Output directory (file for export)")
    parser.add_argument("--quiet", action="store_true", help="Hide progress bars")


def _add_scenario(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--layout", type=str.upper, default=None, choices=LAYOUT_KINDS)
    parser.add_argument("--controller", type=str.lower, default=None, choices=CONTROLLER_KINDS)
    parser.add_argument("--demand", type=float, default=None, help="Vehicles per second and main lane")
    parser.add_argument("--duration", type=float, default=None, help="Simulated seconds")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--weights", default=None, help="Policy weights for the rl controller")


def _add_execution(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--parallel", type=int, default=None, help="Worker processes (0 = all cores)")
    parser.add_argument("--no-cache", action="store_true", help="Ignore the episode cache")


def _load(args: argparse.Namespace, **overrides: object) -> ExperimentConfig:
    config = load_config(args.config)
    values = {
        key: getattr(args, key, None)
        for key in ("layout", "controller", "demand", "duration", "seed", "weights", "parallel")
    }
    values.update({key: value for key, value in overrides.items() if value is not None})
    if getattr(args, "no_cache", False):
        values["use_cache"] = False
    return apply_overrides(config, **values)


class _runner:
    """Episode runner plus the cache it owns, closed on exit."""

    def __init__(self, args: argparse.Namespace, config: ExperimentConfig) -> None:
        self.cache: Optional[CacheStore] = None
        if config.run.use_cache and config.run.cache_path:
            self.cache = CacheStore(config.run.cache_path)
        self.runner = EpisodeRunner(
            cache=self.cache, parallel=config.run.parallel, show_progress=not args.quiet
        )

    def __enter__(self) -> EpisodeRunner:
        return self.runner

    def __exit__(self, *exc_info: object) -> None:
        if self.cache:
            self.cache.close()


def _parse_models(items: List[str]) -> Dict[str, str]:
    if not items:
        raise ConfigError("crossval: --models LAYOUT=PATH is required")
    models: Dict[str, str] = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not path:
            raise ConfigError(f"--models: expected LAYOUT=PATH, got {item!r}")
        models[name.strip().upper()] = path.strip()
    return models


def _output_dir(args: argparse.Namespace, config: ExperimentConfig, command: str, name: str) -> Path:
    path = Path(args.output) if args.output else Path(config.run.output_root) / command / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str, manifest: RunManifest) -> None:
    path.write_text(text, encoding="utf-8")
    manifest.add_artifact(path.name, path)


def _finish(manifest: RunManifest, out: Path, started: float) -> None:
    manifest.finish(time.perf_counter() - started)
    manifest.write(out / "manifest.json")


def _configure_logging(level: str) -> None:
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
        root.addHandler(handler)
    root.setLevel(level)


if __name__ == "__main__":
    raise SystemExit(main())

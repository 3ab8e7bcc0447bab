from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

from aimgraph.behavior.car_following import CfParams, CfVariant
from aimgraph.core.types import (
    CONTROLLER_KINDS,
    LAYOUT_KINDS,
    ControlSettings,
    GraphSettings,
    KinematicLimits,
    NetworkSettings,
    ProtocolSettings,
    RunConfig,
    ScenarioConfig,
    SignalTiming,
    TrafficSettings,
    TrainingSettings,
    VehicleGeometry,
)

OUTPUT_ENV = "AIMGRAPH_OUTPUT"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    vehicle: VehicleGeometry = field(default_factory=VehicleGeometry)
    car_following: CfParams = field(default_factory=CfParams)
    signals: SignalTiming = field(default_factory=SignalTiming)
    control: ControlSettings = field(default_factory=ControlSettings)
    traffic: TrafficSettings = field(default_factory=TrafficSettings)
    graph: GraphSettings = field(default_factory=GraphSettings)
    network: NetworkSettings = field(default_factory=NetworkSettings)
    training: TrainingSettings = field(default_factory=TrainingSettings)
    protocols: ProtocolSettings = field(default_factory=ProtocolSettings)
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["simulation"] = data.pop("limits")
        data["car_following"] = _cf_to_dict(self.car_following)
        data["traffic"]["turn_weights"] = dict(self.traffic.turn_weights)
        data["training"]["vehicle_caps"] = dict(self.training.vehicle_caps)
        return data


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Load a YAML experiment file or a JSON run manifest; None gives defaults."""
    if path is None:
        return _with_env(parse_config({}))
    try:
        import yaml
    except ImportError as exc:
        raise RuntimeError("pyyaml is required to load experiment configs") from exc

    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if "manifest_version" in data:
        data = data.get("config", {}) or {}
    return _with_env(parse_config(data))


def parse_config(data: Mapping[str, Any]) -> ExperimentConfig:
    scenario_cfg = _section(data, "scenario")
    scenario = ScenarioConfig(
        layout=str(scenario_cfg.get("layout", "L")).upper(),
        controller=str(scenario_cfg.get("controller", "efifo")).lower(),
        demand=_float(scenario_cfg, "scenario.demand", 0.15),
        duration=_float(scenario_cfg, "scenario.duration", 100.0),
        seed=_int(scenario_cfg, "scenario.seed", 0),
        weights=scenario_cfg.get("weights"),
    )

    sim_cfg = _section(data, "simulation")
    limits = KinematicLimits(
        dt=_float(sim_cfg, "simulation.dt", 0.1),
        a_min=_float(sim_cfg, "simulation.a_min", -5.0),
        a_max=_float(sim_cfg, "simulation.a_max", 3.0),
        v_max=_float(sim_cfg, "simulation.v_max", 10.0),
    )

    vehicle_cfg = _section(data, "vehicle")
    vehicle = VehicleGeometry(
        length=_float(vehicle_cfg, "vehicle.length", 5.0),
        width=_float(vehicle_cfg, "vehicle.width", 2.0),
    )

    cf_cfg = _section(data, "car_following")
    variant_value = str(cf_cfg.get("variant", "eidm")).lower()
    try:
        variant = CfVariant(variant_value)
    except ValueError as exc:
        raise ConfigError(f"car_following.variant: unknown variant {variant_value!r}") from exc
    car_following = CfParams(
        v0=_float(cf_cfg, "car_following.v0", 10.0),
        time_headway=_float(cf_cfg, "car_following.time_headway", 1.5),
        min_gap=_float(cf_cfg, "car_following.min_gap", 2.0),
        max_accel=_float(cf_cfg, "car_following.max_accel", 3.0),
        comfortable_decel=_float(cf_cfg, "car_following.comfortable_decel", 2.0),
        delta=_float(cf_cfg, "car_following.delta", 4.0),
        drive_off_delay=_float(cf_cfg, "car_following.drive_off_delay", 0.5),
        variant=variant,
        release_speed=_float(cf_cfg, "car_following.release_speed", 3.0),
        standstill_speed=_float(cf_cfg, "car_following.standstill_speed", 0.3),
    )

    signal_cfg = _section(data, "signals")
    signals = SignalTiming(
        main_green=_float(signal_cfg, "signals.main_green", 24.0),
        side_green=_float(signal_cfg, "signals.side_green", 12.0),
        yellow=_float(signal_cfg, "signals.yellow", 2.0),
    )

    control_cfg = _section(data, "control")
    control = ControlSettings(
        clearance_margin=_float(control_cfg, "control.clearance_margin", 1.5),
        commit_margin=_float(control_cfg, "control.commit_margin", 5.0),
        gap_margin=_float(control_cfg, "control.gap_margin", 2.0),
        stall_timeout=_float(control_cfg, "control.stall_timeout", 20.0),
        stop_speed=_float(control_cfg, "control.stop_speed", 0.3),
    )

    traffic_cfg = _section(data, "traffic")
    weights_cfg = traffic_cfg.get("turn_weights") or {"through": 0.6, "left": 0.2, "right": 0.2}
    if not isinstance(weights_cfg, dict):
        raise ConfigError("traffic.turn_weights must be a mapping")
    traffic = TrafficSettings(
        t_shift=_float(traffic_cfg, "traffic.t_shift", 1.0),
        turn_weights={str(key): float(value) for key, value in weights_cfg.items()},
        spawn_clearance=_float(traffic_cfg, "traffic.spawn_clearance", 2.0),
    )

    graph_cfg = _section(data, "graph")
    graph = GraphSettings(
        sigma_lon=_float(graph_cfg, "graph.sigma_lon", 10.0),
        sigma_lat=_float(graph_cfg, "graph.sigma_lat", 2.0),
        c_max=_float(graph_cfg, "graph.c_max", 10.0),
        control_zone_length=_float(graph_cfg, "graph.control_zone_length", 50.0),
    )

    network_cfg = _section(data, "network")
    network = NetworkSettings(
        vertex_hidden=_int(network_cfg, "network.vertex_hidden", 64),
        edge_hidden=_int(network_cfg, "network.edge_hidden", 32),
        conv_hidden=_int(network_cfg, "network.conv_hidden", 64),
        squash=str(network_cfg.get("squash", "tanh")).lower(),
    )

    train_cfg = _section(data, "training")
    caps_cfg = train_cfg.get("vehicle_caps") or {"S": 8, "M": 12, "L": 18, "XL": 24}
    defaults = TrainingSettings()
    training = TrainingSettings(
        total_steps=_int(train_cfg, "training.total_steps", defaults.total_steps),
        start_steps=_int(train_cfg, "training.start_steps", defaults.start_steps),
        train_every=_int(train_cfg, "training.train_every", defaults.train_every),
        gamma=_float(train_cfg, "training.gamma", defaults.gamma),
        tau=_float(train_cfg, "training.tau", defaults.tau),
        policy_delay=_int(train_cfg, "training.policy_delay", defaults.policy_delay),
        target_noise=_float(train_cfg, "training.target_noise", defaults.target_noise),
        target_noise_clip=_float(
            train_cfg, "training.target_noise_clip", defaults.target_noise_clip
        ),
        exploration_noise=_float(
            train_cfg, "training.exploration_noise", defaults.exploration_noise
        ),
        batch_size=_int(train_cfg, "training.batch_size", defaults.batch_size),
        buffer_size=_int(train_cfg, "training.buffer_size", defaults.buffer_size),
        learning_rate=_float(train_cfg, "training.learning_rate", defaults.learning_rate),
        w_flow=_float(train_cfg, "training.w_flow", defaults.w_flow),
        w_act=_float(train_cfg, "training.w_act", defaults.w_act),
        w_coll=_float(train_cfg, "training.w_coll", defaults.w_coll),
        terminal_on_collision=bool(
            train_cfg.get("terminal_on_collision", defaults.terminal_on_collision)
        ),
        episode_duration=_float(
            train_cfg, "training.episode_duration", defaults.episode_duration
        ),
        demand_low=_float(train_cfg, "training.demand_low", defaults.demand_low),
        demand_high=_float(train_cfg, "training.demand_high", defaults.demand_high),
        vehicle_caps={str(key).upper(): int(value) for key, value in caps_cfg.items()},
        eval_interval=_int(train_cfg, "training.eval_interval", defaults.eval_interval),
        eval_demand=_float(train_cfg, "training.eval_demand", defaults.eval_demand),
        eval_duration=_float(train_cfg, "training.eval_duration", defaults.eval_duration),
    )

    protocol_cfg = _section(data, "protocols")
    proto_defaults = ProtocolSettings()
    protocols = ProtocolSettings(
        runs=_int(protocol_cfg, "protocols.runs", proto_defaults.runs),
        demand_low=_float(protocol_cfg, "protocols.demand_low", proto_defaults.demand_low),
        demand_high=_float(protocol_cfg, "protocols.demand_high", proto_defaults.demand_high),
        duration=_float(protocol_cfg, "protocols.duration", proto_defaults.duration),
        bin_width=_float(protocol_cfg, "protocols.bin_width", proto_defaults.bin_width),
        min_bin_count=_int(protocol_cfg, "protocols.min_bin_count", proto_defaults.min_bin_count),
        crossval_scenarios=_int(
            protocol_cfg, "protocols.crossval_scenarios", proto_defaults.crossval_scenarios
        ),
        crossval_demand_low=_float(
            protocol_cfg, "protocols.crossval_demand_low", proto_defaults.crossval_demand_low
        ),
        crossval_demand_high=_float(
            protocol_cfg, "protocols.crossval_demand_high", proto_defaults.crossval_demand_high
        ),
    )

    run_cfg = _section(data, "run")
    run = RunConfig(
        parallel=_int(run_cfg, "run.parallel", 0),
        cache_path=run_cfg.get("cache_path", ".aimgraph/cache.sqlite"),
        use_cache=bool(run_cfg.get("use_cache", True)),
        output_root=str(run_cfg.get("output_root", "runs")),
    )

    config = ExperimentConfig(
        scenario=scenario,
        limits=limits,
        vehicle=vehicle,
        car_following=car_following,
        signals=signals,
        control=control,
        traffic=traffic,
        graph=graph,
        network=network,
        training=training,
        protocols=protocols,
        run=run,
    )
    validate_config(config)
    return config


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Replace scenario or run fields; None values are ignored."""
    scenario_fields = {"layout", "controller", "demand", "duration", "seed", "weights"}
    run_fields = {"parallel", "cache_path", "use_cache", "output_root"}
    scenario_updates: Dict[str, Any] = {}
    run_updates: Dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in scenario_fields:
            scenario_updates[key] = value
        elif key in run_fields:
            run_updates[key] = value
        else:
            raise ConfigError(f"unknown override {key!r}")
    if "layout" in scenario_updates:
        scenario_updates["layout"] = str(scenario_updates["layout"]).upper()
    if "controller" in scenario_updates:
        scenario_updates["controller"] = str(scenario_updates["controller"]).lower()
    updated = replace(
        config,
        scenario=replace(config.scenario, **scenario_updates),
        run=replace(config.run, **run_updates),
    )
    validate_config(updated)
    return updated


def validate_config(config: ExperimentConfig) -> None:
    scenario = config.scenario
    if scenario.layout not in LAYOUT_KINDS:
        raise ConfigError(f"scenario.layout: expected one of {LAYOUT_KINDS}, got {scenario.layout!r}")
    if scenario.controller not in CONTROLLER_KINDS:
        raise ConfigError(
            f"scenario.controller: expected one of {CONTROLLER_KINDS}, got {scenario.controller!r}"
        )
    _check(scenario.demand >= 0, "scenario.demand", "must be non-negative")
    _check(scenario.duration > 0, "scenario.duration", "must be positive")
    limits = config.limits
    _check(limits.dt > 0, "simulation.dt", "must be positive")
    _check(limits.a_min < 0 < limits.a_max, "simulation.a_min", "must satisfy a_min < 0 < a_max")
    _check(limits.v_max > 0, "simulation.v_max", "must be positive")
    _check(config.vehicle.length > 0 and config.vehicle.width > 0, "vehicle", "dimensions must be positive")
    try:
        config.car_following.validate(limits)
    except ValueError as exc:
        raise ConfigError(f"car_following: {exc}") from exc
    signals = config.signals
    _check(
        signals.main_green > 0 and signals.side_green > 0 and signals.yellow >= 0,
        "signals",
        "green times must be positive and yellow non-negative",
    )
    _check(config.traffic.t_shift >= 0, "traffic.t_shift", "must be non-negative")
    weights = config.traffic.turn_weights
    _check(
        all(value >= 0 for value in weights.values()) and sum(weights.values()) > 0,
        "traffic.turn_weights",
        "must be non-negative with a positive sum",
    )
    _check(config.graph.c_max > 0, "graph.c_max", "must be positive")
    _check(
        config.graph.sigma_lon > 0 and config.graph.sigma_lat > 0,
        "graph.sigma_lon",
        "ellipse axes must be positive",
    )
    _check(config.network.squash in ("tanh", "clip"), "network.squash", "must be tanh or clip")
    training = config.training
    _check(training.total_steps >= 0, "training.total_steps", "must be non-negative")
    _check(0 <= training.gamma <= 1, "training.gamma", "must lie in [0, 1]")
    _check(0 < training.tau <= 1, "training.tau", "must lie in (0, 1]")
    _check(training.policy_delay >= 1, "training.policy_delay", "must be at least 1")
    _check(training.train_every >= 1, "training.train_every", "must be at least 1")
    _check(training.batch_size >= 1, "training.batch_size", "must be at least 1")
    _check(
        min(training.w_flow, training.w_act, training.w_coll) >= 0,
        "training.w_flow",
        "reward weights must be non-negative",
    )
    _check(
        0 < training.demand_low <= training.demand_high,
        "training.demand_low",
        "must satisfy 0 < demand_low <= demand_high",
    )
    protocols = config.protocols
    _check(protocols.runs >= 1, "protocols.runs", "must be at least 1")
    _check(
        0 < protocols.demand_low <= protocols.demand_high,
        "protocols.demand_low",
        "must satisfy 0 < demand_low <= demand_high",
    )
    _check(protocols.bin_width > 0, "protocols.bin_width", "must be positive")
    _check(config.run.parallel >= 0, "run.parallel", "must be non-negative")


def _with_env(config: ExperimentConfig) -> ExperimentConfig:
    output_root = os.environ.get(OUTPUT_ENV)
    if output_root:
        return replace(config, run=replace(config.run, output_root=output_root))
    return config


def _section(data: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    section = data.get(name, {}) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: section must be a mapping")
    return section


def _number(section: Mapping[str, Any], key: str, default: Any, cast: Callable[[Any], Any]) -> Any:
    value = section.get(key.rsplit(".", 1)[-1], default)
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from exc


def _float(section: Mapping[str, Any], key: str, default: float) -> float:
    return _number(section, key, default, float)


def _int(section: Mapping[str, Any], key: str, default: int) -> int:
    return _number(section, key, default, int)


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{key}: {message}")


def _cf_to_dict(params: CfParams) -> Dict[str, Any]:
    data = asdict(params)
    data["variant"] = params.variant.value
    return data

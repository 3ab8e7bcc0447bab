from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

LAYOUT_KINDS: Tuple[str, ...] = ("S", "M", "L", "XL")
CONTROLLER_KINDS: Tuple[str, ...] = ("tl", "fifo", "efifo", "pr", "rl")


@dataclass(frozen=True)
class KinematicLimits:
    """Integration step and actuator bounds shared by agents and car-following."""

    dt: float = 0.1
    a_min: float = -5.0
    a_max: float = 3.0
    v_max: float = 10.0

    @property
    def accel_scale(self) -> float:
        return max(abs(self.a_min), self.a_max)

    @property
    def accel_mid(self) -> float:
        return 0.5 * (self.a_min + self.a_max)

    @property
    def accel_half_range(self) -> float:
        return 0.5 * (self.a_max - self.a_min)


@dataclass(frozen=True)
class VehicleGeometry:
    length: float = 5.0
    width: float = 2.0

    @property
    def half_width(self) -> float:
        return 0.5 * self.width


@dataclass(frozen=True)
class SignalTiming:
    """Fixed signal timings in seconds."""

    main_green: float = 24.0
    side_green: float = 12.0
    yellow: float = 2.0


@dataclass(frozen=True)
class ControlSettings:
    """Tuning shared by the non-learned controllers."""

    clearance_margin: float = 1.5
    commit_margin: float = 5.0
    gap_margin: float = 2.0
    stall_timeout: float = 20.0
    stop_speed: float = 0.3


@dataclass(frozen=True)
class TrafficSettings:
    t_shift: float = 1.0
    turn_weights: Mapping[str, float] = field(
        default_factory=lambda: {"through": 0.6, "left": 0.2, "right": 0.2}
    )
    spawn_clearance: float = 2.0


@dataclass(frozen=True)
class GraphSettings:
    sigma_lon: float = 10.0
    sigma_lat: float = 2.0
    c_max: float = 10.0
    control_zone_length: float = 50.0


@dataclass(frozen=True)
class NetworkSettings:
    vertex_hidden: int = 64
    edge_hidden: int = 32
    conv_hidden: int = 64
    squash: str = "tanh"


@dataclass(frozen=True)
class TrainingSettings:
    """TD3 hyperparameters, reward weights and episode shaping."""

    total_steps: int = 50_000
    start_steps: int = 1_000
    train_every: int = 1
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    exploration_noise: float = 0.1
    batch_size: int = 64
    buffer_size: int = 100_000
    learning_rate: float = 3e-4
    w_flow: float = 1.0
    w_act: float = 0.1
    w_coll: float = 10.0
    terminal_on_collision: bool = True
    episode_duration: float = 100.0
    demand_low: float = 0.1
    demand_high: float = 0.4
    vehicle_caps: Mapping[str, int] = field(
        default_factory=lambda: {"S": 8, "M": 12, "L": 18, "XL": 24}
    )
    eval_interval: int = 5_000
    eval_demand: float = 0.3
    eval_duration: float = 100.0


@dataclass(frozen=True)
class ProtocolSettings:
    runs: int = 100
    demand_low: float = 0.05
    demand_high: float = 0.3
    duration: float = 100.0
    bin_width: float = 0.1
    min_bin_count: int = 5
    crossval_scenarios: int = 100
    crossval_demand_low: float = 0.2
    crossval_demand_high: float = 0.4


@dataclass(frozen=True)
class RunConfig:
    """Runtime execution settings."""

    parallel: int = 0
    cache_path: Optional[str] = ".aimgraph/cache.sqlite"
    use_cache: bool = True
    output_root: str = "runs"


@dataclass(frozen=True)
class ScenarioConfig:
    """One episode: where, under which controller, how much traffic."""

    layout: str = "L"
    controller: str = "efifo"
    demand: float = 0.15
    duration: float = 100.0
    seed: int = 0
    weights: Optional[str] = None


@dataclass(frozen=True)
class EpisodeEvent:
    """Structured anomaly recorded during an episode."""

    time: float
    kind: str
    vehicle_id: Optional[int] = None
    detail: Dict[str, Any] = field(default_factory=dict)

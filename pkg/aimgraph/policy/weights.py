from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Dict, Iterator, Tuple, TypeVar

import numpy as np

from aimgraph.core.rng import derive_rng
from aimgraph.core.types import NetworkSettings
from aimgraph.scenegraph.graph import EDGE_FEATURES, VERTEX_FEATURES

OUTPUT_INIT_RANGE = 3e-3
CRITIC_NAMES = ("critic_1", "critic_2")

T = TypeVar("T")


class _TensorGroup:
    """Nested dataclass of named float64 arrays."""

    def tensors(self, prefix: str = "") -> Dict[str, np.ndarray]:
        """Flat ``{dotted.name: array}`` view sharing memory with this object."""
        out: Dict[str, np.ndarray] = {}
        for item in fields(self):  # type: ignore[arg-type]
            value = getattr(self, item.name)
            name = f"{prefix}{item.name}"
            if isinstance(value, _TensorGroup):
                out.update(value.tensors(f"{name}."))
            elif isinstance(value, tuple):
                for group, part in zip(CRITIC_NAMES, value):
                    out.update(part.tensors(f"{prefix}{group}."))
            else:
                out[name] = value
        return out

    def map(self: T, fn: Callable[[np.ndarray], np.ndarray]) -> T:
        kwargs = {}
        for item in fields(self):  # type: ignore[arg-type]
            value = getattr(self, item.name)
            if isinstance(value, _TensorGroup):
                kwargs[item.name] = value.map(fn)
            elif isinstance(value, tuple):
                kwargs[item.name] = tuple(part.map(fn) for part in value)
            else:
                kwargs[item.name] = np.asarray(fn(value), dtype=np.float64)
        return type(self)(**kwargs)

    def copy(self: T) -> T:
        return self.map(np.array)  # type: ignore[attr-defined]

    def zeros_like(self: T) -> T:
        return self.map(np.zeros_like)  # type: ignore[attr-defined]

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: tuple(value.shape) for name, value in self.tensors().items()}

    def __iter__(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.tensors().items())


@dataclass(eq=False)
class DenseWeights(_TensorGroup):
    matrix: np.ndarray
    bias: np.ndarray

    @property
    def in_features(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def out_features(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(eq=False)
class RelationalWeights(_TensorGroup):
    """One message matrix per edge relation plus the self-loop matrix ``W_0``."""

    same_lane: np.ndarray
    crossing: np.ndarray
    self_loop: np.ndarray

    def relation(self, index: int) -> np.ndarray:
        return (self.same_lane, self.crossing)[index]


@dataclass(eq=False)
class ActorWeights(_TensorGroup):
    v_enc: DenseWeights
    e_enc: DenseWeights
    conv_1: RelationalWeights
    conv_2: RelationalWeights
    dec: DenseWeights


@dataclass(eq=False)
class CriticWeights(_TensorGroup):
    v_enc: DenseWeights
    e_enc: DenseWeights
    conv_1: RelationalWeights
    conv_2: RelationalWeights
    head: DenseWeights


@dataclass(eq=False)
class PolicyWeights(_TensorGroup):
    actor: ActorWeights
    critics: Tuple[CriticWeights, CriticWeights]

    def equals(self, other: "PolicyWeights") -> bool:
        mine, theirs = self.tensors(), other.tensors()
        return mine.keys() == theirs.keys() and all(
            mine[name].shape == theirs[name].shape and np.array_equal(mine[name], theirs[name])
            for name in mine
        )


def expected_shapes(settings: NetworkSettings = NetworkSettings()) -> Dict[str, Tuple[int, ...]]:
    return init_policy(settings, seed=0, zero=True).shapes()


def init_policy(
    settings: NetworkSettings = NetworkSettings(),
    seed: int = 0,
    zero: bool = False,
) -> PolicyWeights:
    """Fresh actor and twin critics.

    ReLU layers use He-normal matrices, the output layers a small uniform
    range, and all biases start at zero. Every tensor draws from its own
    named stream so adding a tensor does not shift the others.
    """
    def trunk(prefix: str, vertex_in: int) -> Dict[str, _TensorGroup]:
        vertex_hidden, edge_hidden, conv = settings.vertex_hidden, settings.edge_hidden, settings.conv_hidden
        return dict(
            v_enc=_dense(f"{prefix}.v_enc", vertex_in, vertex_hidden, seed, zero),
            e_enc=_dense(f"{prefix}.e_enc", EDGE_FEATURES, edge_hidden, seed, zero),
            conv_1=_relational(f"{prefix}.conv_1", vertex_hidden + edge_hidden, vertex_hidden, conv, seed, zero),
            conv_2=_relational(f"{prefix}.conv_2", conv, conv, conv, seed, zero),
        )

    actor = ActorWeights(
        **trunk("actor", VERTEX_FEATURES),
        dec=_dense("actor.dec", settings.conv_hidden, 1, seed, zero, output=True),
    )
    critics = tuple(
        CriticWeights(
            **trunk(name, VERTEX_FEATURES + 1),
            head=_dense(f"{name}.head", settings.conv_hidden, 1, seed, zero, output=True),
        )
        for name in CRITIC_NAMES
    )
    return PolicyWeights(actor=actor, critics=critics)  # type: ignore[arg-type]


def _dense(name: str, fan_in: int, fan_out: int, seed: int, zero: bool, output: bool = False) -> DenseWeights:
    bias = np.zeros(fan_out)
    if zero:
        return DenseWeights(matrix=np.zeros((fan_out, fan_in)), bias=bias)
    rng = derive_rng(seed, "init", f"{name}.matrix")
    if output:
        matrix = rng.uniform(-OUTPUT_INIT_RANGE, OUTPUT_INIT_RANGE, size=(fan_out, fan_in))
    else:
        matrix = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
    return DenseWeights(matrix=matrix, bias=bias)


def _relational(name: str, message_in: int, self_in: int, fan_out: int, seed: int, zero: bool) -> RelationalWeights:
    def he(part: str, fan_in: int) -> np.ndarray:
        if zero:
            return np.zeros((fan_out, fan_in))
        rng = derive_rng(seed, "init", f"{name}.{part}")
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))

    return RelationalWeights(
        same_lane=he("same_lane", message_in),
        crossing=he("crossing", message_in),
        self_loop=he("self_loop", self_in),
    )

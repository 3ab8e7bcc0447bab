from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch
from typing import Any, Dict, Tuple

import numpy as np

from aimgraph.core.types import KinematicLimits
from aimgraph.policy.layers import (
    DenseCache,
    RelationalCache,
    dense_backward,
    dense_forward,
    relational_backward,
    relational_forward,
)
from aimgraph.policy.weights import (
    ActorWeights,
    CriticWeights,
    DenseWeights,
    RelationalWeights,
)
from aimgraph.scenegraph.graph import SceneGraph

SQUASH_KINDS = ("tanh", "clip")


@dataclass(frozen=True, eq=False)
class TrunkCache:
    v_enc: DenseCache
    e_enc: DenseCache
    conv_1: RelationalCache
    conv_2: RelationalCache


@dataclass(frozen=True, eq=False)
class ActorCache:
    trunk: TrunkCache
    dec: DenseCache
    logits: np.ndarray
    squash: str


@dataclass(frozen=True, eq=False)
class CriticCache:
    trunk: TrunkCache
    head: DenseCache
    num_vertices: int


@dataclass(frozen=True, eq=False)
class Gradients:
    """Parameter gradients shaped like the weights, plus input gradients."""

    weights: Any
    inputs: Dict[str, np.ndarray]


def to_acceleration(actions: np.ndarray, limits: KinematicLimits = KinematicLimits()) -> np.ndarray:
    """Map normalised actions onto the open interval (a_min, a_max).

    A saturated tanh returns exactly +-1 in float64, so the result is pulled
    one ulp inside the bounds.
    """
    accelerations = limits.accel_mid + limits.accel_half_range * np.asarray(actions, dtype=np.float64)
    return np.clip(
        accelerations,
        np.nextafter(limits.a_min, np.inf),
        np.nextafter(limits.a_max, -np.inf),
    )


def to_normalized(accelerations: np.ndarray, limits: KinematicLimits = KinematicLimits()) -> np.ndarray:
    return (np.asarray(accelerations, dtype=np.float64) - limits.accel_mid) / limits.accel_half_range


def actor_pass(
    graph: SceneGraph,
    weights: ActorWeights,
    squash: str = "tanh",
) -> Tuple[np.ndarray, ActorCache]:
    """Normalised per-vertex actions in [-1, 1] and the recorded activations."""
    if squash not in SQUASH_KINDS:
        raise ValueError(f"Unknown squash kind: {squash}")
    hidden, trunk = _trunk_forward(graph.vertex_features, graph, weights)
    logits, dec = dense_forward(hidden, weights.dec, activation="linear")
    logits = logits[:, 0]
    actions = np.tanh(logits) if squash == "tanh" else np.clip(logits, -1.0, 1.0)
    return actions, ActorCache(trunk=trunk, dec=dec, logits=logits, squash=squash)


def actor_forward(
    graph: SceneGraph,
    weights: ActorWeights,
    limits: KinematicLimits = KinematicLimits(),
    squash: str = "tanh",
) -> np.ndarray:
    """Acceleration per vertex, in vertex order."""
    actions, _ = actor_pass(graph, weights, squash)
    return to_acceleration(actions, limits)


def critic_pass(
    graph: SceneGraph,
    actions: np.ndarray,
    weights: CriticWeights,
) -> Tuple[float, CriticCache]:
    """Joint Q value of normalised ``actions``; the mean of per-vertex heads."""
    actions = np.asarray(actions, dtype=np.float64).reshape(-1)
    if actions.shape[0] != graph.num_vertices:
        raise ValueError(
            f"Action length {actions.shape[0]} does not match vertex count {graph.num_vertices}"
        )
    inputs = np.concatenate([graph.vertex_features, actions[:, None]], axis=1)
    hidden, trunk = _trunk_forward(inputs, graph, weights)
    values, head = dense_forward(hidden, weights.head, activation="linear")
    q = float(values.mean()) if graph.num_vertices else 0.0
    return q, CriticCache(trunk=trunk, head=head, num_vertices=graph.num_vertices)


def critic_forward(graph: SceneGraph, actions: np.ndarray, weights: CriticWeights) -> float:
    q, _ = critic_pass(graph, actions, weights)
    return q


@singledispatch
def backward(cache: Any, grad: Any, weights: Any) -> Gradients:
    """Reverse-mode gradients for any recorded forward pass.

    ``grad`` is the gradient of the scalar objective with respect to the
    forward output: a matrix for layers, a per-vertex vector of normalised
    actions for the actor and a scalar for the critic.
    """
    raise TypeError(f"No backward pass for {type(cache).__name__}")


@backward.register(DenseCache)
def _dense(cache: DenseCache, grad: np.ndarray, weights: DenseWeights) -> Gradients:
    grad_inputs, grads = dense_backward(cache, grad, weights)
    return Gradients(weights=grads, inputs={"inputs": grad_inputs})


@backward.register(RelationalCache)
def _relational(cache: RelationalCache, grad: np.ndarray, weights: RelationalWeights) -> Gradients:
    grad_vertices, grad_edges, grads = relational_backward(cache, grad, weights)
    inputs = {"vertices": grad_vertices}
    if grad_edges is not None:
        inputs["edge_features"] = grad_edges
    return Gradients(weights=grads, inputs=inputs)


@backward.register(ActorCache)
def _actor(cache: ActorCache, grad: np.ndarray, weights: ActorWeights) -> Gradients:
    grad = np.asarray(grad, dtype=np.float64).reshape(-1)
    if cache.squash == "tanh":
        grad_logits = grad * (1.0 - np.tanh(cache.logits) ** 2)
    else:
        grad_logits = grad * (np.abs(cache.logits) < 1.0)
    grad_hidden, dec = dense_backward(cache.dec, grad_logits[:, None], weights.dec)
    grad_vertex, grad_edges, trunk = _trunk_backward(cache.trunk, grad_hidden, weights)
    return Gradients(
        weights=ActorWeights(dec=dec, **trunk),
        inputs={"vertex_features": grad_vertex, "edge_features": grad_edges},
    )


@backward.register(CriticCache)
def _critic(cache: CriticCache, grad: float, weights: CriticWeights) -> Gradients:
    count = max(cache.num_vertices, 1)
    grad_values = np.full((cache.num_vertices, 1), float(grad) / count)
    grad_hidden, head = dense_backward(cache.head, grad_values, weights.head)
    grad_inputs, grad_edges, trunk = _trunk_backward(cache.trunk, grad_hidden, weights)
    return Gradients(
        weights=CriticWeights(head=head, **trunk),
        inputs={
            "vertex_features": grad_inputs[:, :-1],
            "action": grad_inputs[:, -1],
            "edge_features": grad_edges,
        },
    )


def _trunk_forward(inputs: np.ndarray, graph: SceneGraph, weights: Any) -> Tuple[np.ndarray, TrunkCache]:
    vertices, v_enc = dense_forward(inputs, weights.v_enc)
    edges, e_enc = dense_forward(graph.edge_features, weights.e_enc)
    hidden, conv_1 = relational_forward(
        vertices, graph.src, graph.dst, graph.edge_types, weights.conv_1, edge_features=edges
    )
    hidden, conv_2 = relational_forward(hidden, graph.src, graph.dst, graph.edge_types, weights.conv_2)
    return hidden, TrunkCache(v_enc=v_enc, e_enc=e_enc, conv_1=conv_1, conv_2=conv_2)


def _trunk_backward(
    cache: TrunkCache,
    grad_hidden: np.ndarray,
    weights: Any,
) -> Tuple[np.ndarray, np.ndarray, Dict[str, Any]]:
    grad_hidden, _, conv_2 = relational_backward(cache.conv_2, grad_hidden, weights.conv_2)
    grad_vertices, grad_edges, conv_1 = relational_backward(cache.conv_1, grad_hidden, weights.conv_1)
    grad_inputs, v_enc = dense_backward(cache.v_enc, grad_vertices, weights.v_enc)
    grad_edge_features, e_enc = dense_backward(cache.e_enc, grad_edges, weights.e_enc)
    return grad_inputs, grad_edge_features, dict(v_enc=v_enc, e_enc=e_enc, conv_1=conv_1, conv_2=conv_2)

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from aimgraph.policy.weights import DenseWeights, RelationalWeights
from aimgraph.scenegraph.graph import RELATIONS

ACTIVATIONS = ("relu", "linear")
NO_WINNER = -1


@dataclass(frozen=True, eq=False)
class DenseCache:
    inputs: np.ndarray
    pre: np.ndarray
    activation: str


@dataclass(frozen=True, eq=False)
class RelationalCache:
    """Activations recorded by one relational convolution.

    ``winners[i * R + r, c]`` is the edge index whose message supplied the
    maximum of channel ``c`` for vertex ``i`` and relation ``r``, or
    ``NO_WINNER`` when the vertex has no incoming edge of that relation.
    """

    vertices: np.ndarray
    inputs: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    edge_types: np.ndarray
    winners: np.ndarray
    pre: np.ndarray

    @property
    def vertex_width(self) -> int:
        return int(self.vertices.shape[1])


def relu(values: np.ndarray) -> np.ndarray:
    return np.maximum(values, 0.0)


def dense_forward(
    inputs: np.ndarray,
    weights: DenseWeights,
    activation: str = "relu",
) -> Tuple[np.ndarray, DenseCache]:
    if activation not in ACTIVATIONS:
        raise ValueError(f"Unknown activation: {activation}")
    inputs = np.asarray(inputs, dtype=np.float64).reshape(-1, weights.in_features)
    pre = inputs @ weights.matrix.T + weights.bias
    out = relu(pre) if activation == "relu" else pre
    return out, DenseCache(inputs=inputs, pre=pre, activation=activation)


def dense_backward(
    cache: DenseCache,
    grad_out: np.ndarray,
    weights: DenseWeights,
) -> Tuple[np.ndarray, DenseWeights]:
    grad_pre = grad_out * (cache.pre > 0.0) if cache.activation == "relu" else grad_out
    grads = DenseWeights(matrix=grad_pre.T @ cache.inputs, bias=grad_pre.sum(axis=0))
    return grad_pre @ weights.matrix, grads


def relational_forward(
    vertices: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    edge_types: np.ndarray,
    weights: RelationalWeights,
    edge_features: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, RelationalCache]:
    """Relational graph convolution with element-wise max aggregation.

    ``h_i' = ReLU(sum_r max_{j in N_i^r} W_r m_ji + W_0 h_i)`` where the
    message input ``m_ji`` is ``h_j`` or, when edge features are given, the
    concatenation ``[h_j, e_ji]``. An empty neighbour set contributes zero.
    """
    num_vertices = vertices.shape[0]
    inputs = vertices[src]
    if edge_features is not None:
        inputs = np.concatenate([inputs, edge_features], axis=1)
    width = weights.self_loop.shape[0]

    messages = np.zeros((src.shape[0], width))
    for index in range(len(RELATIONS)):
        mask = edge_types == index
        messages[mask] = inputs[mask] @ weights.relation(index).T

    slots = dst * len(RELATIONS) + edge_types
    aggregated, winners = _max_aggregate(messages, slots, src, num_vertices * len(RELATIONS))
    pre = aggregated.reshape(num_vertices, len(RELATIONS), width).sum(axis=1)
    pre = pre + vertices @ weights.self_loop.T
    cache = RelationalCache(
        vertices=vertices,
        inputs=inputs,
        src=src,
        dst=dst,
        edge_types=edge_types,
        winners=winners,
        pre=pre,
    )
    return relu(pre), cache


def relational_backward(
    cache: RelationalCache,
    grad_out: np.ndarray,
    weights: RelationalWeights,
) -> Tuple[np.ndarray, Optional[np.ndarray], RelationalWeights]:
    """Gradients of :func:`relational_forward`.

    Returns the vertex gradient, the edge-feature gradient (``None`` for a
    plain convolution) and the weight gradients.
    """
    grad_pre = grad_out * (cache.pre > 0.0)
    grad_vertices = grad_pre @ weights.self_loop

    num_edges = cache.src.shape[0]
    slots = cache.dst * len(RELATIONS) + cache.edge_types
    routed = cache.winners[slots] == np.arange(num_edges)[:, None]
    grad_messages = grad_pre[cache.dst] * routed

    grad_inputs = np.zeros_like(cache.inputs)
    relation_grads = []
    for index in range(len(RELATIONS)):
        mask = cache.edge_types == index
        relation_grads.append(grad_messages[mask].T @ cache.inputs[mask])
        grad_inputs[mask] = grad_messages[mask] @ weights.relation(index)

    np.add.at(grad_vertices, cache.src, grad_inputs[:, : cache.vertex_width])
    grad_edges = None
    if cache.inputs.shape[1] > cache.vertex_width:
        grad_edges = grad_inputs[:, cache.vertex_width :]

    grads = RelationalWeights(
        same_lane=relation_grads[0],
        crossing=relation_grads[1],
        self_loop=grad_pre.T @ cache.vertices,
    )
    return grad_vertices, grad_edges, grads


def _max_aggregate(
    messages: np.ndarray,
    slots: np.ndarray,
    src: np.ndarray,
    num_slots: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-slot element-wise maximum and the edge that produced it.

    Ties go to the edge with the lowest source vertex index.
    """
    num_edges, width = messages.shape
    aggregated = np.full((num_slots, width), -np.inf)
    np.maximum.at(aggregated, slots, messages)

    order = np.argsort(src, kind="stable")
    rank = np.empty(num_edges, dtype=np.int64)
    rank[order] = np.arange(num_edges)
    candidates = np.where(messages == aggregated[slots], rank[:, None], num_edges)
    best = np.full((num_slots, width), num_edges, dtype=np.int64)
    np.minimum.at(best, slots, candidates)

    winners = np.full((num_slots, width), NO_WINNER, dtype=np.int64)
    found = best < num_edges
    winners[found] = order[best[found]]
    aggregated[~found] = 0.0
    return aggregated, winners

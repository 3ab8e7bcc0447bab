import tempfile
import unittest
from pathlib import Path

import numpy as np

from aimgraph.core.types import KinematicLimits, NetworkSettings
from aimgraph.policy import (
    DenseWeights,
    RelationalWeights,
    WeightsFormatError,
    WeightsShapeError,
    actor_forward,
    actor_pass,
    backward,
    critic_forward,
    critic_pass,
    dense_backward,
    dense_forward,
    expected_shapes,
    init_policy,
    load_weights,
    relational_backward,
    relational_forward,
    save_weights,
    to_acceleration,
    to_normalized,
    weights_digest,
)
from aimgraph.policy.serialization import decode_weights, encode_weights
from aimgraph.scenegraph import RELATIONS, SceneGraph

SMALL = NetworkSettings(vertex_hidden=6, edge_hidden=4, conv_hidden=5)


def random_graph(rng: np.random.Generator, max_vertices: int = 8) -> SceneGraph:
    count = int(rng.integers(1, max_vertices + 1))
    pairs = [(i, j) for i in range(count) for j in range(count) if i != j]
    chosen = [pair for pair in pairs if rng.random() < 0.4]
    edges = sorted((i, j, int(rng.integers(0, len(RELATIONS)))) for i, j in chosen)
    return SceneGraph(
        vehicle_ids=tuple(range(count)),
        vertex_features=rng.normal(size=(count, 3)),
        src=np.array([edge[0] for edge in edges], dtype=np.int64),
        dst=np.array([edge[1] for edge in edges], dtype=np.int64),
        edge_types=np.array([edge[2] for edge in edges], dtype=np.int64),
        edge_features=rng.normal(size=(len(edges), 2)),
        normalized=True,
    )


def reference_convolution(
    vertices: np.ndarray, graph: SceneGraph, weights: RelationalWeights, edge_features: np.ndarray = None
) -> np.ndarray:
    out = []
    for i in range(vertices.shape[0]):
        total = weights.self_loop @ vertices[i]
        for r in range(len(RELATIONS)):
            messages = []
            for k in range(graph.num_edges):
                if graph.dst[k] == i and graph.edge_types[k] == r:
                    message = vertices[graph.src[k]]
                    if edge_features is not None:
                        message = np.concatenate([message, edge_features[k]])
                    messages.append(weights.relation(r) @ message)
            if messages:
                total = total + np.max(np.stack(messages), axis=0)
        out.append(np.maximum(total, 0.0))
    return np.array(out).reshape(vertices.shape[0], weights.self_loop.shape[0])

def reference_dense(inputs: np.ndarray, weights: DenseWeights, rectify: bool = True) -> np.ndarray:
    rows = []
    for row in inputs:
        value = weights.matrix @ row + weights.bias
        rows.append(np.maximum(value, 0.0) if rectify else value)
    return np.array(rows).reshape(inputs.shape[0], weights.out_features)


def reference_trunk(inputs: np.ndarray, graph: SceneGraph, weights) -> np.ndarray:
    vertices = reference_dense(inputs, weights.v_enc)
    edges = reference_dense(graph.edge_features, weights.e_enc)
    hidden = reference_convolution(vertices, graph, weights.conv_1, edges)
    return reference_convolution(hidden, graph, weights.conv_2)


def random_relational(rng: np.random.Generator, width: int, message_in: int, self_in: int) -> RelationalWeights:
    return RelationalWeights(
        same_lane=rng.normal(size=(width, message_in)),
        crossing=rng.normal(size=(width, message_in)),
        self_loop=rng.normal(size=(width, self_in)),
    )


def assert_gradient_close(test: unittest.TestCase, analytic: float, numeric: float, label: str) -> None:
    tolerance = 1e-4 * max(abs(analytic), abs(numeric)) + 1e-8
    test.assertLessEqual(abs(analytic - numeric), tolerance, f"{label}: {analytic} vs {numeric}")


class LayerTests(unittest.TestCase):
    def test_dense_linear_chain_gradient(self) -> None:
        rng = np.random.default_rng(0)
        first = DenseWeights(rng.normal(size=(4, 3)), rng.normal(size=4))
        second = DenseWeights(rng.normal(size=(2, 4)), rng.normal(size=2))
        x = rng.normal(size=(1, 3))
        hidden, cache_1 = dense_forward(x, first, activation="linear")
        out, cache_2 = dense_forward(hidden, second, activation="linear")
        grad_hidden, _ = dense_backward(cache_2, np.ones_like(out), second)
        grad_x, grads = dense_backward(cache_1, grad_hidden, first)
        np.testing.assert_allclose(grad_x[0], (second.matrix @ first.matrix).T @ np.ones(2))
        np.testing.assert_allclose(grads.bias, second.matrix.T @ np.ones(2))

    def test_unknown_activation(self) -> None:
        weights = DenseWeights(np.zeros((1, 1)), np.zeros(1))
        with self.assertRaises(ValueError):
            dense_forward(np.zeros((1, 1)), weights, activation="sigmoid")

    def test_relational_matches_dense_reference(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(200):
            graph = random_graph(rng)
            weights = RelationalWeights(
                same_lane=rng.normal(size=(5, 5)),
                crossing=rng.normal(size=(5, 5)),
                self_loop=rng.normal(size=(5, 3)),
            )
            edge_features = rng.normal(size=(graph.num_edges, 2))
            out, _ = relational_forward(
                graph.vertex_features, graph.src, graph.dst, graph.edge_types, weights, edge_features
            )
            expected = reference_convolution(graph.vertex_features, graph, weights, edge_features)
            np.testing.assert_allclose(out, expected, rtol=0.0, atol=1e-10)

    def test_plain_relational_matches_dense_reference(self) -> None:
        rng = np.random.default_rng(6)
        for _ in range(200):
            graph = random_graph(rng)
            weights = random_relational(rng, width=4, message_in=3, self_in=3)
            out, _ = relational_forward(graph.vertex_features, graph.src, graph.dst, graph.edge_types, weights)
            expected = reference_convolution(graph.vertex_features, graph, weights)
            np.testing.assert_allclose(out, expected, rtol=0.0, atol=1e-10)

    def test_isolated_vertex_uses_self_loop_only(self) -> None:
        weights = RelationalWeights(
            same_lane=np.ones((2, 2)), crossing=np.ones((2, 2)), self_loop=np.array([[1.0, 0.0], [0.0, -1.0]])
        )
        empty = np.zeros(0, dtype=np.int64)
        out, _ = relational_forward(np.array([[2.0, 3.0]]), empty, empty, empty, weights)
        np.testing.assert_allclose(out, [[2.0, 0.0]])

    def test_ties_go_to_lowest_source(self) -> None:
        weights = RelationalWeights(
            same_lane=np.eye(2), crossing=np.eye(2), self_loop=np.zeros((2, 2))
        )
        vertices = np.array([[0.0, 0.0], [1.0, 2.0], [1.0, 2.0]])
        src = np.array([2, 1], dtype=np.int64)
        dst = np.array([0, 0], dtype=np.int64)
        types = np.array([0, 0], dtype=np.int64)
        out, cache = relational_forward(vertices, src, dst, types, weights)
        np.testing.assert_allclose(out[0], [1.0, 2.0])
        grad_vertices, grad_edges, _ = relational_backward(cache, np.array([[1.0, 1.0], [0, 0], [0, 0]]), weights)
        self.assertIsNone(grad_edges)
        np.testing.assert_allclose(grad_vertices[1], [1.0, 1.0])
        np.testing.assert_allclose(grad_vertices[2], [0.0, 0.0])


class NetworkTests(unittest.TestCase):
    def test_shapes(self) -> None:
        shapes = expected_shapes(SMALL)
        self.assertEqual(shapes["actor.v_enc.matrix"], (6, 3))
        self.assertEqual(shapes["actor.conv_1.same_lane"], (5, 10))
        self.assertEqual(shapes["actor.conv_1.self_loop"], (5, 6))
        self.assertEqual(shapes["critic_1.v_enc.matrix"], (6, 4))
        self.assertEqual(shapes["critic_2.head.matrix"], (1, 5))

    def test_zero_weights_give_mid_action_and_zero_value(self) -> None:
        weights = init_policy(SMALL, zero=True)
        graph = random_graph(np.random.default_rng(2))
        accelerations = actor_forward(graph, weights.actor)
        np.testing.assert_allclose(accelerations, np.full(graph.num_vertices, -1.0))
        actions = np.zeros(graph.num_vertices)
        self.assertEqual(critic_forward(graph, actions, weights.critics[0]), 0.0)

    def test_actions_stay_in_limits(self) -> None:
        rng = np.random.default_rng(3)
        weights = init_policy(SMALL, seed=3)
        weights.actor.dec.matrix[...] = rng.normal(scale=50.0, size=weights.actor.dec.matrix.shape)
        limits = KinematicLimits()
        for squash in ("tanh", "clip"):
            accelerations = actor_forward(random_graph(rng), weights.actor, limits, squash)
            self.assertTrue(np.all(accelerations > limits.a_min))
            self.assertTrue(np.all(accelerations < limits.a_max))

    def test_action_scaling_round_trip(self) -> None:
        limits = KinematicLimits()
        np.testing.assert_allclose(to_acceleration([-1.0, 0.0, 1.0], limits), [-5.0, -1.0, 3.0])
        np.testing.assert_allclose(to_normalized([-5.0, 3.0], limits), [-1.0, 1.0])

    def test_empty_graph(self) -> None:
        weights = init_policy(SMALL, seed=0)
        graph = SceneGraph(
            vehicle_ids=(),
            vertex_features=np.zeros((0, 3)),
            src=np.zeros(0, dtype=np.int64),
            dst=np.zeros(0, dtype=np.int64),
            edge_types=np.zeros(0, dtype=np.int64),
            edge_features=np.zeros((0, 2)),
        )
        self.assertEqual(actor_forward(graph, weights.actor).shape, (0,))
        self.assertEqual(critic_forward(graph, np.zeros(0), weights.critics[0]), 0.0)

    def test_action_length_mismatch(self) -> None:
        weights = init_policy(SMALL, seed=0)
        graph = random_graph(np.random.default_rng(4))
        with self.assertRaises(ValueError):
            critic_forward(graph, np.zeros(graph.num_vertices + 1), weights.critics[0])

    def test_permutation_equivariance_and_invariance(self) -> None:
        rng = np.random.default_rng(5)
        weights = init_policy(SMALL, seed=5)
        for _ in range(50):
            graph = random_graph(rng)
            order = rng.permutation(graph.num_vertices).tolist()
            permuted = graph.permuted(order)
            actions = actor_forward(graph, weights.actor)
            np.testing.assert_allclose(actor_forward(permuted, weights.actor), actions[order], atol=1e-12)
            normalized = rng.uniform(-1.0, 1.0, size=graph.num_vertices)
            q = critic_forward(graph, normalized, weights.critics[0])
            q_permuted = critic_forward(permuted, normalized[order], weights.critics[0])
            self.assertAlmostEqual(q, q_permuted, places=12)

    def test_actor_matches_dense_reference(self) -> None:
        rng = np.random.default_rng(7)
        limits = KinematicLimits()
        for _ in range(200):
            graph = random_graph(rng)
            actor = init_policy(SMALL, seed=int(rng.integers(0, 2**31))).actor
            hidden = reference_trunk(graph.vertex_features, graph, actor)
            logits = reference_dense(hidden, actor.dec, rectify=False)[:, 0]
            expected = limits.accel_mid + limits.accel_half_range * np.tanh(logits)
            np.testing.assert_allclose(actor_forward(graph, actor, limits), expected, rtol=0.0, atol=1e-10)

    def test_critic_matches_dense_reference(self) -> None:
        rng = np.random.default_rng(8)
        for _ in range(200):
            graph = random_graph(rng)
            critic = init_policy(SMALL, seed=int(rng.integers(0, 2**31))).critics[0]
            actions = rng.uniform(-1.0, 1.0, size=graph.num_vertices)
            inputs = np.concatenate([graph.vertex_features, actions[:, None]], axis=1)
            hidden = reference_trunk(inputs, graph, critic)
            expected = float(np.mean(reference_dense(hidden, critic.head, rectify=False)[:, 0]))
            self.assertAlmostEqual(critic_forward(graph, actions, critic), expected, places=10)

    def test_initialisation_is_deterministic(self) -> None:
        self.assertTrue(init_policy(SMALL, seed=9).equals(init_policy(SMALL, seed=9)))
        self.assertFalse(init_policy(SMALL, seed=9).equals(init_policy(SMALL, seed=10)))


class GradientTests(unittest.TestCase):
    eps = 1e-5

    def _check_entries(self, tensors, objective, analytic, rng, label: str) -> None:
        for name, tensor in tensors.items():
            flat = tensor.reshape(-1)
            grad = analytic[name].reshape(-1)
            for index in rng.choice(flat.size, size=min(4, flat.size), replace=False):
                original = flat[index]
                flat[index] = original + self.eps
                upper = objective()
                flat[index] = original - self.eps
                lower = objective()
                flat[index] = original
                numeric = (upper - lower) / (2.0 * self.eps)
                assert_gradient_close(self, float(grad[index]), numeric, f"{label} {name}[{index}]")

    def test_actor_gradients(self) -> None:
        rng = np.random.default_rng(11)
        weights = init_policy(SMALL, seed=11)
        for _ in range(5):
            graph = random_graph(rng, max_vertices=6)
            coefficients = rng.normal(size=graph.num_vertices)

            def objective() -> float:
                actions, _ = actor_pass(graph, weights.actor)
                return float(coefficients @ actions)

            _, cache = actor_pass(graph, weights.actor)
            grads = backward(cache, coefficients, weights.actor)
            self._check_entries(weights.actor.tensors(), objective, grads.weights.tensors(), rng, "actor")

    def test_critic_gradients(self) -> None:
        rng = np.random.default_rng(12)
        weights = init_policy(SMALL, seed=12)
        critic = weights.critics[1]
        for _ in range(5):
            graph = random_graph(rng, max_vertices=6)
            actions = rng.uniform(-1.0, 1.0, size=graph.num_vertices)

            def objective() -> float:
                return critic_forward(graph, actions, critic)

            _, cache = critic_pass(graph, actions, critic)
            grads = backward(cache, 1.0, critic)
            self._check_entries(critic.tensors(), objective, grads.weights.tensors(), rng, "critic")
            self._check_entries({"action": actions}, objective, {"action": grads.inputs["action"]}, rng, "critic")

    def test_unknown_cache_type(self) -> None:
        with self.assertRaises(TypeError):
            backward(object(), 1.0, None)


class SerializationTests(unittest.TestCase):
    def test_round_trip_is_bit_exact(self) -> None:
        weights = init_policy(SMALL, seed=21)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = save_weights(weights, Path(temp_dir) / "weights.bin", SMALL)
            loaded = load_weights(path, SMALL)
            self.assertTrue(loaded.equals(weights))
            self.assertEqual(len(weights_digest(path)), 64)

    def test_settings_read_from_header(self) -> None:
        weights = init_policy(SMALL, seed=22)
        loaded, settings = decode_weights(encode_weights(weights, SMALL))
        self.assertEqual(settings, SMALL)
        self.assertTrue(loaded.equals(weights))

    def test_shape_mismatch(self) -> None:
        payload = encode_weights(init_policy(SMALL, seed=0), SMALL)
        with self.assertRaises(WeightsShapeError) as ctx:
            decode_weights(payload, NetworkSettings())
        self.assertIsNotNone(ctx.exception.expected)

    def test_corrupted_payload(self) -> None:
        payload = bytearray(encode_weights(init_policy(SMALL, seed=0), SMALL))
        payload[-40] ^= 0xFF
        with self.assertRaises(WeightsFormatError):
            decode_weights(bytes(payload))
        with self.assertRaises(WeightsFormatError):
            decode_weights(b"not a weights file at all, clearly not" * 2)

    def test_missing_file(self) -> None:
        with self.assertRaises(FileNotFoundError):
            load_weights("/nonexistent/weights.bin")


if __name__ == "__main__":
    unittest.main()

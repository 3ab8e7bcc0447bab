"""Graph actor and twin critics with hand-written gradients."""

from aimgraph.policy.layers import (
    DenseCache,
    RelationalCache,
    dense_backward,
    dense_forward,
    relational_backward,
    relational_forward,
)
from aimgraph.policy.networks import (
    ActorCache,
    CriticCache,
    Gradients,
    actor_forward,
    actor_pass,
    backward,
    critic_forward,
    critic_pass,
    to_acceleration,
    to_normalized,
)
from aimgraph.policy.serialization import (
    WeightsFormatError,
    WeightsShapeError,
    load_weights,
    save_weights,
    weights_digest,
    weights_to_dict,
)
from aimgraph.policy.weights import (
    ActorWeights,
    CriticWeights,
    DenseWeights,
    PolicyWeights,
    RelationalWeights,
    expected_shapes,
    init_policy,
)

__all__ = [
    "ActorCache",
    "ActorWeights",
    "CriticCache",
    "CriticWeights",
    "DenseCache",
    "DenseWeights",
    "Gradients",
    "PolicyWeights",
    "RelationalCache",
    "RelationalWeights",
    "WeightsFormatError",
    "WeightsShapeError",
    "actor_forward",
    "actor_pass",
    "backward",
    "critic_forward",
    "critic_pass",
    "dense_backward",
    "dense_forward",
    "expected_shapes",
    "init_policy",
    "load_weights",
    "relational_backward",
    "relational_forward",
    "save_weights",
    "to_acceleration",
    "to_normalized",
    "weights_digest",
    "weights_to_dict",
]

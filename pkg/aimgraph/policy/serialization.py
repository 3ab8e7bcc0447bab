from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from aimgraph.core.types import NetworkSettings
from aimgraph.policy.weights import PolicyWeights, expected_shapes, init_policy

logger = logging.getLogger(__name__)

MAGIC = b"AIMGRAPH"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<II")
_DIGEST_SIZE = hashlib.sha256().digest_size
_DTYPE = np.dtype("<f8")


class WeightsFormatError(ValueError):
    """The file is not a readable weights container."""


class WeightsShapeError(ValueError):
    """A tensor in the file does not fit the expected network."""

    def __init__(self, name: str, expected: Optional[Tuple[int, ...]], found: Optional[Tuple[int, ...]]) -> None:
        self.name = name
        self.expected = expected
        self.found = found
        super().__init__(f"Tensor {name}: expected shape {expected}, found {found}")


def encode_weights(weights: PolicyWeights, settings: NetworkSettings = NetworkSettings()) -> bytes:
    tensors = weights.tensors()
    table = []
    chunks = []
    offset = 0
    for name, value in tensors.items():
        data = np.ascontiguousarray(value, dtype=_DTYPE).tobytes(order="C")
        table.append({"name": name, "shape": list(value.shape), "offset": offset})
        chunks.append(data)
        offset += len(data)
    header = json.dumps(
        {"network": asdict(settings), "tensors": table}, sort_keys=True
    ).encode("utf-8")
    body = MAGIC + _PREAMBLE.pack(FORMAT_VERSION, len(header)) + header + b"".join(chunks)
    return body + hashlib.sha256(body).digest()


def decode_weights(
    payload: bytes,
    settings: Optional[NetworkSettings] = None,
) -> Tuple[PolicyWeights, NetworkSettings]:
    """Parse a weights container.

    When ``settings`` is given the tensors must match that network; otherwise
    the network recorded in the header is used.
    """
    minimum = len(MAGIC) + _PREAMBLE.size + _DIGEST_SIZE
    if len(payload) < minimum or not payload.startswith(MAGIC):
        raise WeightsFormatError("Missing weights file header")
    body, digest = payload[:-_DIGEST_SIZE], payload[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise WeightsFormatError("Weights checksum mismatch")
    version, header_length = _PREAMBLE.unpack_from(body, len(MAGIC))
    if version != FORMAT_VERSION:
        raise WeightsFormatError(f"Unsupported weights format version: {version}")
    start = len(MAGIC) + _PREAMBLE.size
    try:
        header = json.loads(body[start : start + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightsFormatError(f"Unreadable weights header: {exc}") from exc
    data = body[start + header_length :]

    if settings is None:
        try:
            settings = NetworkSettings(**header.get("network", {}))
        except TypeError as exc:
            raise WeightsFormatError(f"Unreadable network description: {exc}") from exc
    shapes = expected_shapes(settings)
    found = {entry["name"]: entry for entry in header.get("tensors", [])}
    for name in found:
        if name not in shapes:
            raise WeightsShapeError(name, None, tuple(found[name]["shape"]))

    weights = init_policy(settings, zero=True)
    for name, target in weights.tensors().items():
        entry = found.get(name)
        if entry is None:
            raise WeightsShapeError(name, shapes[name], None)
        shape = tuple(int(dim) for dim in entry["shape"])
        if shape != shapes[name]:
            raise WeightsShapeError(name, shapes[name], shape)
        count = int(np.prod(shape, dtype=np.int64))
        offset = int(entry["offset"])
        if offset < 0 or offset + count * _DTYPE.itemsize > len(data):
            raise WeightsFormatError(f"Tensor {name} extends past the end of the file")
        target[...] = np.frombuffer(data, dtype=_DTYPE, count=count, offset=offset).reshape(shape)
    return weights, settings


def save_weights(
    weights: PolicyWeights,
    path: Union[str, Path],
    settings: NetworkSettings = NetworkSettings(),
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_weights(weights, settings))
    logger.info("Saved policy weights to %s", path)
    return path


def load_weights(
    path: Union[str, Path],
    settings: Optional[NetworkSettings] = None,
) -> PolicyWeights:
    weights, _ = load_weights_with_settings(path, settings)
    return weights


def load_weights_with_settings(
    path: Union[str, Path],
    settings: Optional[NetworkSettings] = None,
) -> Tuple[PolicyWeights, NetworkSettings]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Weights file not found: {path}")
    return decode_weights(path.read_bytes(), settings)


def weights_digest(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def weights_to_dict(weights: PolicyWeights, settings: NetworkSettings = NetworkSettings()) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "network": asdict(settings),
        "tensors": {
            name: {"shape": list(value.shape), "values": value.tolist()}
            for name, value in weights.tensors().items()
        },
    }

from __future__ import annotations

import hashlib
from typing import Any

import numpy as np


def derive_seed(seed: int, *path: Any) -> int:
    """Stable 64-bit child seed for an isolated random stream."""
    path_str = "/".join(str(component) for component in path)
    digest = hashlib.sha256(f"{seed}/{path_str}".encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


def derive_rng(seed: int, *path: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *path))

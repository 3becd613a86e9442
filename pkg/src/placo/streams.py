"""Counter-based uniforms keyed by (seed, stream, instance, human, draw).

Every stochastic quantity in an experiment is a pure function of its key, so
results do not depend on iteration order, dataset order, or the train/test
split. Mixing uses the splitmix64 finalizer.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# Stream tags; one per independent use of randomness.
HUMAN_CORRECT = 1
HUMAN_ERROR = 2
RANDOM_ESTIMATE = 3
TOP_K_ESTIMATE = 4


def _mix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))


def instance_key(instance_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(instance_id.encode(), digest_size=8).digest(), "little")


def instance_keys(ids) -> np.ndarray:
    return np.array([instance_key(i) for i in ids], dtype=np.uint64)


def keyed_uniform(seed: int, stream: int, keys: np.ndarray, human: int, draw: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1), one per entry of ``keys``."""
    keys = np.asarray(keys, dtype=np.uint64)
    h = _mix(np.full(keys.shape, (seed * 0x100000001B3 + stream) % 2**64, dtype=np.uint64))
    h = _mix(h ^ keys)
    h = _mix(h ^ np.uint64((human * 0x1000193 + draw * 0x5BD1E995 + 1) % 2**64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)

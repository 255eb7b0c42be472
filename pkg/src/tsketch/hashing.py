"""Seeded per-layer hashing.

Each item is fingerprinted once with an 8-byte BLAKE2b digest. Layer ``j``
then mixes the fingerprint with its own 64-bit seed through the murmur3
``fmix64`` finalizer and reduces modulo ``w``. The scalar and numpy paths
produce identical indices.
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Sequence

import numpy as np

HASH_FAMILY_ID = 1

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xFF51AFD7ED558CCD
_C2 = 0xC4CEB9FE1A85EC53


def fingerprint(item: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(item, digest_size=8).digest(), "little")


def fingerprints(items: Iterable[bytes]) -> np.ndarray:
    return np.fromiter((fingerprint(x) for x in items), dtype=np.uint64)


def fmix64(x: int) -> int:
    x ^= x >> 33
    x = (x * _C1) & _M64
    x ^= x >> 33
    x = (x * _C2) & _M64
    x ^= x >> 33
    return x


def fmix64_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64).copy()
    s33 = np.uint64(33)
    with np.errstate(over="ignore"):
        x ^= x >> s33
        x *= np.uint64(_C1)
        x ^= x >> s33
        x *= np.uint64(_C2)
        x ^= x >> s33
    return x


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Counter-mode splitmix64 stream of ``count`` layer seeds."""
    state = master_seed & _M64
    seeds = []
    for _ in range(count):
        state = (state + _GOLDEN) & _M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        seeds.append(z ^ (z >> 31))
    return seeds


def layer_index(fp: int, seed: int, w: int) -> int:
    return fmix64(fp ^ seed) % w


def layer_indices(fps: np.ndarray, seeds: Sequence[int], w: int) -> np.ndarray:
    """Index matrix of shape ``(len(seeds), len(fps))``."""
    fps = np.asarray(fps, dtype=np.uint64)
    out = np.empty((len(seeds), fps.size), dtype=np.intp)
    for j, seed in enumerate(seeds):
        out[j] = (fmix64_array(fps ^ np.uint64(seed)) % np.uint64(w)).astype(np.intp)
    return out

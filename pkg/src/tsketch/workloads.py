"""Stream sources and the exact-count oracle.

Synthetic items are decimal rank strings ``b"0"`` .. ``b"n-1"``, rank 0 being
the most frequent.
"""

from __future__ import annotations

import os
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ZipfSpec:
    skew: float
    distinct: int
    total: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.skew >= 0:
            raise ValueError(f"skew must be >= 0, got {self.skew}")
        if self.distinct < 1:
            raise ValueError(f"distinct must be >= 1, got {self.distinct}")
        if self.total < 1:
            raise ValueError(f"total must be >= 1, got {self.total}")


def zipf_probabilities(skew: float, distinct: int) -> np.ndarray:
    weights = np.arange(1, distinct + 1, dtype=np.float64) ** -skew
    return weights / weights.sum()


def zipf_ranks(spec: ZipfSpec) -> np.ndarray:
    """``spec.total`` zero-based ranks drawn by inverse-CDF lookup."""
    cdf = np.cumsum(zipf_probabilities(spec.skew, spec.distinct))
    cdf[-1] = 1.0
    u = np.random.default_rng(spec.seed).random(spec.total)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def rank_items(ranks: Iterable[int]) -> list[bytes]:
    return [str(int(r)).encode() for r in ranks]


def generate_zipf(spec: ZipfSpec) -> Iterator[bytes]:
    for r in zipf_ranks(spec):
        yield str(int(r)).encode()


def write_stream(items: Iterable[bytes], path: str | os.PathLike) -> int:
    count = 0
    with open(path, "wb") as fh:
        for item in items:
            fh.write(item + b"\n")
            count += 1
    return count


def ingest_file(path: str | os.PathLike) -> Iterator[bytes]:
    """One item per line, terminator (``\\n`` or ``\\r\\n``) stripped.

    A blank line is the empty item.
    """
    with open(path, "rb") as fh:
        for line in fh:
            if line.endswith(b"\r\n"):
                yield line[:-2]
            elif line.endswith(b"\n"):
                yield line[:-1]
            else:
                yield line


@dataclass
class ExactOracle:
    counts: dict[bytes, int] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return sum(self.counts.values())

    @property
    def n(self) -> int:
        return len(self.counts)

    def __getitem__(self, item: bytes) -> int:
        return self.counts.get(item, 0)

    def items(self) -> list[bytes]:
        return list(self.counts)


def oracle_build(stream: Iterable[bytes]) -> ExactOracle:
    return ExactOracle(dict(Counter(stream)))


def oracle_from_ranks(ranks: np.ndarray) -> ExactOracle:
    keys, counts = np.unique(ranks, return_counts=True)
    return ExactOracle({str(int(k)).encode(): int(c) for k, c in zip(keys, counts)})

"""Accuracy and resource metrics.

AAE and ARE average over the query set, which the benchmark takes to be the
distinct items of the stream (not stream occurrences).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .sketch import TSketch


@dataclass
class MetricReport:
    aae: float
    are: float
    query_count: int
    space_bits: int
    occupation_ratio: float
    capacity: int
    max_recordable: int
    are_skipped: int = 0


def _pair(estimates: Sequence[float], truths: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    if est.shape != tru.shape:
        raise ValueError(f"length mismatch: {est.size} estimates vs {tru.size} truths")
    if est.size == 0:
        raise ValueError("need at least one estimate")
    return est, tru


def compute_accuracy(estimates: Sequence[float], truths: Sequence[float]) -> tuple[float, float]:
    est, tru = _pair(estimates, truths)
    if np.any(tru == 0):
        raise ValueError("relative error is undefined for a zero true frequency")
    err = np.abs(est - tru)
    return float(err.mean()), float((err / tru).mean())


def accuracy_skipping_zeros(
    estimates: Sequence[float], truths: Sequence[float]
) -> tuple[float, float, int]:
    """Like ``compute_accuracy`` but ARE ignores zero-truth items; returns the skip count."""
    est, tru = _pair(estimates, truths)
    err = np.abs(est - tru)
    keep = tru != 0
    are = float((err[keep] / tru[keep]).mean()) if keep.any() else float("nan")
    return float(err.mean()), are, int((~keep).sum())


def compute_resources(sketch: TSketch) -> tuple[int, float, int]:
    """(space_bits, occupation_ratio, capacity)."""
    g = sketch.geometry
    ones = sum(layer.ones() for layer in sketch.layers)
    return g.total_bits, ones / g.total_bits, g.capacity


def metric_report(sketch: TSketch, estimates, truths) -> MetricReport:
    aae, are, skipped = accuracy_skipping_zeros(estimates, truths)
    space, occupation, capacity = compute_resources(sketch)
    return MetricReport(aae, are, len(truths), space, occupation, capacity, capacity - 1, skipped)

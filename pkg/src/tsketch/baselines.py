"""Rectangular count-min (CM) and conservative-update (CU) sketches.

Both share hashing, counter storage and serialization with ``TSketch`` so
that, given equal seeds, a rectangular and a trapezoidal sketch map every
item to the same counter positions.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from . import hashing
from .config import rectangular_geometry
from .sketch import GeometryError, SketchGeometry, TSketch, Variant

KINDS = {"cm": 0, "cu": 1}


class RSketch(TSketch):
    """Every layer ``log2(B)`` bits wide. ``kind`` picks the update rule."""

    def __init__(self, geometry: SketchGeometry, master_seed: int = 0, kind: str = "cm"):
        if geometry.variant is not Variant.R_STRUCTURE:
            raise GeometryError("RSketch needs an r-structure geometry")
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {sorted(KINDS)}, got {kind!r}")
        super().__init__(geometry, master_seed)
        self.kind = kind

    @classmethod
    def _from_kind_byte(cls, geometry: SketchGeometry, seed: int, kind_byte: int) -> RSketch:
        from .sketch import FormatError

        for name, code in KINDS.items():
            if code == kind_byte:
                return cls(geometry, seed, name)
        raise FormatError(f"unknown sketch kind {kind_byte}")

    def _header_extra(self) -> bytes:
        return bytes([KINDS[self.kind]])

    def compatible(self, other: TSketch) -> bool:
        return super().compatible(other) and self.kind == other.kind

    def insert(self, item: bytes) -> None:
        if self.kind == "cm":
            super().insert(item)
            return
        idx = self.indices(item)
        values = [layer.read(i) for layer, i in zip(self.layers, idx)]
        low = min(values)
        for layer, i, v in zip(self.layers, idx, values):
            if v == low:
                layer.increment(i)
        self.total += 1

    def update(self, items: Iterable[bytes]) -> None:
        if self.kind == "cm":
            super().update(items)
            return
        self.update_sequence(hashing.fingerprints(items))

    def update_fingerprints(self, fps: np.ndarray, counts: np.ndarray | None = None) -> None:
        if self.kind == "cm":
            super().update_fingerprints(fps, counts)
            return
        fps = np.asarray(fps, dtype=np.uint64)
        if counts is not None:
            fps = np.repeat(fps, np.asarray(counts, dtype=np.int64))
        self.update_sequence(fps)

    def update_sequence(self, fps: np.ndarray) -> None:
        """Insert fingerprints in stream order; CU is order-dependent."""
        if self.kind == "cm":
            super().update_fingerprints(fps)
            return
        fps = np.asarray(fps, dtype=np.uint64)
        idx = hashing.layer_indices(fps, self.seeds, self.w).T.tolist()
        rows = [layer.values().tolist() for layer in self.layers]
        sat = self.layers[0].sat
        K = self.K
        for mapped in idx:
            low = min(rows[j][mapped[j]] for j in range(K))
            if low == sat:
                continue
            for j in range(K):
                if rows[j][mapped[j]] == low:
                    rows[j][mapped[j]] = low + 1
        for layer, row in zip(self.layers, rows):
            layer.assign(np.array(row, dtype=np.uint64))
        self.total += int(fps.size)

    def cm_query(self, item: bytes) -> int:
        return self.query(item).raw_estimate


def cm_sketch(B: int, k: int, w: int, master_seed: int = 0) -> RSketch:
    return RSketch(rectangular_geometry(B, k, w), master_seed, "cm")


def cu_sketch(B: int, k: int, w: int, master_seed: int = 0) -> RSketch:
    return RSketch(rectangular_geometry(B, k, w), master_seed, "cu")

"""Layered count-min sketch with per-layer counter widths.

Layer 1 holds the narrowest counters and layer ``K`` the widest. Every item
is hashed into one counter per layer; all mapped counters are incremented
(saturating) on insert, and a query takes the minimum over the mapped
counters that have not saturated.
"""

from __future__ import annotations

import enum
import struct
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from . import hashing
from .analytics import rho
from .counters import LayerArray, words_for


class GeometryError(ValueError):
    """Layer plan violates a geometry invariant."""


class FormatError(ValueError):
    """Serialized sketch is malformed."""


class Variant(enum.IntEnum):
    R_STRUCTURE = 0
    SPACE_SAVING = 1
    CAPACITY_IMPROVEMENT = 2


def log2_exact(x: int, name: str) -> int:
    if x < 1 or x & (x - 1):
        raise GeometryError(f"{name} must be a power of two, got {x}")
    return x.bit_length() - 1


def extra_layer_bits(base_bits: int, log_d: int, s: int) -> int:
    """Bits per row used by ``s`` layers stacked above the base layers."""
    return s * base_bits + log_d * s * (s + 1) // 2


def saved_row_bits(k: int, log_d: int) -> int:
    return log_d * k * (k - 1) // 2


@dataclass(frozen=True)
class SketchGeometry:
    """Validated layer plan.

    ``base_bits`` is the width of the equivalent rectangular sketch, so
    ``B = 2**base_bits``. For the capacity-improvement variant the widths
    above ``base_bits`` are the extra layers bought with the saved space.
    """

    variant: Variant
    w: int
    layer_bits: tuple[int, ...]
    d: int = 1
    base_bits: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "layer_bits", tuple(int(b) for b in self.layer_bits))
        bits = self.layer_bits
        if self.w < 1:
            raise GeometryError(f"w must be >= 1, got {self.w}")
        if not bits:
            raise GeometryError("at least one layer is required")
        if any(not 1 <= b <= 64 for b in bits):
            raise GeometryError(f"layer widths must lie in [1, 64], got {list(bits)}")

        if self.variant is Variant.R_STRUCTURE:
            if len(set(bits)) != 1:
                raise GeometryError("r-structure layers must share one width")
            if self.d != 1:
                raise GeometryError("r-structure geometry uses d = 1")
            base = bits[0] if self.base_bits is None else self.base_bits
            if base != bits[0]:
                raise GeometryError("base_bits must equal the r-structure width")
            object.__setattr__(self, "base_bits", base)
            return

        if self.d < 2:
            raise GeometryError(f"trapezoidal geometry needs d >= 2, got {self.d}")
        log_d = log2_exact(self.d, "d")
        for lo, hi in zip(bits, bits[1:]):
            if hi <= lo:
                raise GeometryError(f"layer widths must strictly increase, got {list(bits)}")
            if hi - lo != log_d:
                raise GeometryError(
                    f"consecutive widths must differ by log2(d) = {log_d}, got {list(bits)}"
                )

        if self.variant is Variant.SPACE_SAVING:
            base = bits[-1] if self.base_bits is None else self.base_bits
            if base != bits[-1]:
                raise GeometryError("space-saving base_bits must equal the widest layer")
            object.__setattr__(self, "base_bits", base)
            return

        if self.base_bits is None:
            object.__setattr__(self, "base_bits", _infer_base_bits(bits, log_d))
        elif self.base_bits not in bits:
            raise GeometryError(f"base_bits {self.base_bits} is not one of the layer widths")
        k = bits.index(self.base_bits) + 1
        s = len(bits) - k
        saved = saved_row_bits(k, log_d)
        if not extra_layer_bits(self.base_bits, log_d, s) <= saved < extra_layer_bits(
            self.base_bits, log_d, s + 1
        ):
            raise GeometryError(
                f"{s} extra layers do not match the saved space of {k} base layers"
            )

    @property
    def K(self) -> int:
        return len(self.layer_bits)

    @property
    def B(self) -> int:
        return 1 << self.base_bits

    @property
    def log_d(self) -> int:
        return self.d.bit_length() - 1

    @property
    def base_layers(self) -> int:
        return self.layer_bits.index(self.base_bits) + 1

    @property
    def extra_layers(self) -> int:
        return self.K - self.base_layers

    @property
    def row_bits(self) -> int:
        return sum(self.layer_bits)

    @property
    def total_bits(self) -> int:
        return self.w * self.row_bits

    @property
    def capacity(self) -> int:
        return 1 << self.layer_bits[-1]

    def with_w(self, w: int) -> SketchGeometry:
        return SketchGeometry(self.variant, w, self.layer_bits, self.d, self.base_bits)


def _infer_base_bits(bits: tuple[int, ...], log_d: int) -> int:
    K = len(bits)
    for k in range(1, K + 1):
        base = bits[k - 1]
        s = K - k
        saved = saved_row_bits(k, log_d)
        if extra_layer_bits(base, log_d, s) <= saved < extra_layer_bits(base, log_d, s + 1):
            return base
    raise GeometryError(f"widths {list(bits)} are not a capacity-improvement plan")


@dataclass
class QueryResult:
    raw_estimate: int
    saturated_layers: int
    all_saturated: bool
    corrected_estimate: float | None = None


@dataclass
class BatchQuery:
    """Column-wise query results for many items."""

    raw: np.ndarray
    saturated: np.ndarray
    all_saturated: np.ndarray
    corrected: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.raw)


def correct_estimate(f_min, error_prob, N: int, w: int):
    """``max(0, f_min - error_prob * (N - f_min) / w)``; works elementwise on arrays."""
    f_min = np.asarray(f_min, dtype=np.float64)
    noise = np.maximum(N - f_min, 0.0) / w
    return np.maximum(0.0, f_min - error_prob * noise)


def corrected_estimates(raw, saturated, *, w: int, K: int, n: int, N: int) -> np.ndarray:
    """Subtract the expected collision noise, weighted by the error probability.

    The item's own frequency inside ``N - f`` is unknown, so the raw estimate
    stands in for it. Results are clamped at zero.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    table = np.array([rho(w, n, K, i) for i in range(K + 1)])
    return correct_estimate(raw, table[np.asarray(saturated)], N, w)


class TSketch:
    """Trapezoidal (or rectangular) count-min sketch."""

    def __init__(self, geometry: SketchGeometry, master_seed: int = 0):
        self.geometry = geometry
        self.master_seed = master_seed & ((1 << 64) - 1)
        self.seeds = hashing.derive_seeds(self.master_seed, geometry.K)
        self.layers = [LayerArray(b, geometry.w) for b in geometry.layer_bits]
        self.total = 0
        self._sat = np.array([layer.sat for layer in self.layers], dtype=np.uint64)

    def __repr__(self) -> str:
        g = self.geometry
        return f"{type(self).__name__}({g.variant.name}, w={g.w}, bits={list(g.layer_bits)}, N={self.total})"

    @property
    def w(self) -> int:
        return self.geometry.w

    @property
    def K(self) -> int:
        return self.geometry.K

    def indices(self, item: bytes) -> list[int]:
        fp = hashing.fingerprint(item)
        return [hashing.layer_index(fp, s, self.w) for s in self.seeds]

    def insert(self, item: bytes) -> None:
        for layer, idx in zip(self.layers, self.indices(item)):
            layer.increment(idx)
        self.total += 1

    def update(self, items: Iterable[bytes]) -> None:
        """Insert every item of ``items``."""
        tally = Counter(items)
        if not tally:
            return
        fps = hashing.fingerprints(tally.keys())
        self.update_fingerprints(fps, np.fromiter(tally.values(), dtype=np.uint64))

    def update_fingerprints(self, fps: np.ndarray, counts: np.ndarray | None = None) -> None:
        """Bulk insert by precomputed fingerprint, ``counts[j]`` copies of ``fps[j]``."""
        fps = np.asarray(fps, dtype=np.uint64)
        counts = np.ones(fps.size, dtype=np.uint64) if counts is None else np.asarray(counts, dtype=np.uint64)
        idx = hashing.layer_indices(fps, self.seeds, self.w)
        for layer, row in zip(self.layers, idx):
            layer.add_counts(row, counts)
        self.total += int(counts.sum())

    def _mapped_values(self, item: bytes) -> list[int]:
        return [layer.read(i) for layer, i in zip(self.layers, self.indices(item))]

    def query(self, item: bytes) -> QueryResult:
        values = self._mapped_values(item)
        live = [v for v, layer in zip(values, self.layers) if v != layer.sat]
        saturated = self.K - len(live)
        if not live:
            return QueryResult(self.layers[-1].sat, saturated, True)
        return QueryResult(min(live), saturated, False)

    def query_corrected(self, item: bytes, n: int) -> QueryResult:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        res = self.query(item)
        res.corrected_estimate = float(
            corrected_estimates(
                [res.raw_estimate], [res.saturated_layers], w=self.w, K=self.K, n=n, N=self.total
            )[0]
        )
        return res

    def query_fingerprints(self, fps: np.ndarray, n: int | None = None) -> BatchQuery:
        idx = hashing.layer_indices(fps, self.seeds, self.w)
        vals = np.stack([layer.values()[row] for layer, row in zip(self.layers, idx)])
        sat_mask = vals == self._sat[:, None]
        saturated = sat_mask.sum(axis=0)
        live = np.where(sat_mask, np.iinfo(np.uint64).max, vals)
        all_sat = saturated == self.K
        raw = np.where(all_sat, self._sat[-1], live.min(axis=0)).astype(np.int64)
        out = BatchQuery(raw, saturated, all_sat)
        if n is not None:
            out.corrected = corrected_estimates(raw, saturated, w=self.w, K=self.K, n=n, N=self.total)
        return out

    def query_many(self, items: Iterable[bytes], n: int | None = None) -> BatchQuery:
        return self.query_fingerprints(hashing.fingerprints(items), n)

    def counter_matrix(self) -> list[np.ndarray]:
        return [layer.values() for layer in self.layers]

    def compatible(self, other: TSketch) -> bool:
        return (
            type(self) is type(other)
            and self.geometry == other.geometry
            and self.seeds == other.seeds
        )

    def merge(self, other: TSketch) -> TSketch:
        """Counter-wise saturating sum of two sketches built with the same seeds."""
        if not self.compatible(other):
            raise GeometryError("cannot merge sketches with different geometry or seeds")
        out = self.copy()
        for mine, theirs in zip(out.layers, other.layers):
            mine.add_values(theirs.values())
        out.total = self.total + other.total
        return out

    def copy(self) -> TSketch:
        return deserialize(serialize(self))

    def to_bytes(self) -> bytes:
        return serialize(self)

    def _header_extra(self) -> bytes:
        return b""


MAGIC = b"TSKT"
VERSION = 1
_HEADER = struct.Struct("<4sHBBHQHQQ")


def serialize(sketch: TSketch) -> bytes:
    """Little-endian container; see README for the field layout."""
    g = sketch.geometry
    parts = [
        _HEADER.pack(
            MAGIC, VERSION, int(g.variant), hashing.HASH_FAMILY_ID, g.K, g.w, g.d,
            sketch.master_seed, sketch.total,
        ),
        sketch._header_extra(),
        bytes(g.layer_bits),
    ]
    parts.extend(layer.words.astype("<u8").tobytes() for layer in sketch.layers)
    return b"".join(parts)


def deserialize(data: bytes) -> TSketch:
    data = bytes(data)
    if len(data) < _HEADER.size:
        raise FormatError(f"truncated header: {len(data)} bytes")
    magic, version, variant, family, K, w, d, seed, total = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    if family != hashing.HASH_FAMILY_ID:
        raise FormatError(f"unknown hash family {family}")
    try:
        variant = Variant(variant)
    except ValueError:
        raise FormatError(f"unknown variant {variant}") from None
    pos = _HEADER.size
    kind = None
    if variant is Variant.R_STRUCTURE:
        if len(data) < pos + 1:
            raise FormatError("truncated sketch-kind byte")
        kind = data[pos]
        pos += 1
    if len(data) < pos + K:
        raise FormatError("truncated layer widths")
    bits = tuple(data[pos : pos + K])
    pos += K
    try:
        geometry = SketchGeometry(variant, w, bits, d)
    except GeometryError as exc:
        raise FormatError(f"invalid geometry: {exc}") from exc
    expected = pos + 8 * sum(words_for(b, w) for b in bits)
    if len(data) != expected:
        raise FormatError(f"payload is {len(data)} bytes, expected {expected}")

    if kind is None:
        sketch = TSketch(geometry, seed)
    else:
        from .baselines import RSketch

        sketch = RSketch._from_kind_byte(geometry, seed, kind)
    layers = []
    for b in bits:
        n = words_for(b, w)
        words = np.frombuffer(data, dtype="<u8", count=n, offset=pos).astype(np.uint64)
        pos += 8 * n
        try:
            layers.append(LayerArray(b, w, words))
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
    sketch.layers = layers
    sketch.total = total
    return sketch

"""Bit-packed storage for one sketch layer.

A layer holds ``w`` counters of ``b`` bits each, packed back to back into
little-endian 64-bit words. Counter ``i`` occupies logical bits
``[i*b, (i+1)*b)``; a counter may straddle two words. Increments saturate at
``2**b - 1`` and a counter at that value is treated as overflowed.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64
MASK64 = (1 << WORD_BITS) - 1


def words_for(bits_per_counter: int, num_counters: int) -> int:
    return -(-bits_per_counter * num_counters // WORD_BITS)


class LayerArray:
    """``num_counters`` saturating counters of ``bits_per_counter`` bits."""

    __slots__ = ("bits", "size", "sat", "words")

    def __init__(self, bits_per_counter: int, num_counters: int, words: np.ndarray | None = None):
        if not 1 <= bits_per_counter <= WORD_BITS:
            raise ValueError(f"bits_per_counter must be in [1, 64], got {bits_per_counter}")
        if num_counters < 1:
            raise ValueError(f"num_counters must be >= 1, got {num_counters}")
        self.bits = bits_per_counter
        self.size = num_counters
        self.sat = (1 << bits_per_counter) - 1
        nwords = words_for(bits_per_counter, num_counters)
        if words is None:
            self.words = np.zeros(nwords, dtype=np.uint64)
        else:
            words = np.asarray(words, dtype=np.uint64)
            if words.shape != (nwords,):
                raise ValueError(f"expected {nwords} words, got {words.shape}")
            self.words = words.copy()
            tail = nwords * WORD_BITS - num_counters * bits_per_counter
            if tail and int(self.words[-1]) >> (WORD_BITS - tail):
                raise ValueError("padding bits beyond the last counter must be zero")

    def __repr__(self) -> str:
        return f"LayerArray(bits={self.bits}, size={self.size})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerArray):
            return NotImplemented
        return (
            self.bits == other.bits
            and self.size == other.size
            and np.array_equal(self.words, other.words)
        )

    def _check(self, index: int) -> None:
        if not 0 <= index < self.size:
            raise IndexError(f"counter index {index} out of range [0, {self.size})")

    def read(self, index: int) -> int:
        self._check(index)
        start = index * self.bits
        wi, off = divmod(start, WORD_BITS)
        value = int(self.words[wi]) >> off
        if off + self.bits > WORD_BITS:
            value |= int(self.words[wi + 1]) << (WORD_BITS - off)
        return value & self.sat

    def _write(self, index: int, value: int) -> None:
        start = index * self.bits
        wi, off = divmod(start, WORD_BITS)
        word = int(self.words[wi])
        word &= ~(self.sat << off) & MASK64
        word |= (value << off) & MASK64
        self.words[wi] = word
        spill = off + self.bits - WORD_BITS
        if spill > 0:
            nxt = int(self.words[wi + 1])
            nxt &= ~((1 << spill) - 1) & MASK64
            nxt |= value >> (WORD_BITS - off)
            self.words[wi + 1] = nxt

    def increment(self, index: int) -> int:
        """Saturating +1 on counter ``index``; returns the new value."""
        value = self.read(index)
        if value < self.sat:
            value += 1
            self._write(index, value)
        return value

    def is_saturated(self, index: int) -> bool:
        return self.read(index) == self.sat

    def ones(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def popcount_ratio(self) -> float:
        return self.ones() / (self.size * self.bits)

    # Vectorized whole-layer access. Bulk updates unpack, modify and repack.

    def _layout(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        start = np.arange(self.size, dtype=np.uint64) * np.uint64(self.bits)
        wi = (start >> np.uint64(6)).astype(np.intp)
        off = start & np.uint64(63)
        spill = off + np.uint64(self.bits) > np.uint64(WORD_BITS)
        return wi, off, spill

    def values(self) -> np.ndarray:
        """All counters as a ``uint64`` array."""
        wi, off, spill = self._layout()
        padded = np.append(self.words, np.uint64(0))
        lo = padded[wi] >> off
        back = (np.uint64(WORD_BITS) - off) & np.uint64(63)
        hi = np.where(spill, padded[wi + 1] << back, np.uint64(0))
        return (lo | hi) & np.uint64(self.sat)

    def assign(self, values: np.ndarray) -> None:
        """Overwrite every counter. Values must already lie in ``[0, sat]``."""
        values = np.asarray(values, dtype=np.uint64)
        if values.shape != (self.size,):
            raise ValueError(f"expected {self.size} values, got {values.shape}")
        if values.size and int(values.max()) > self.sat:
            raise ValueError("value exceeds counter saturation")
        wi, off, spill = self._layout()
        words = np.zeros(len(self.words) + 1, dtype=np.uint64)
        np.bitwise_or.at(words, wi, values << off)
        back = (np.uint64(WORD_BITS) - off) & np.uint64(63)
        np.bitwise_or.at(words, wi + 1, np.where(spill, values >> back, np.uint64(0)))
        self.words = words[:-1]

    def add_counts(self, indices: np.ndarray, counts: np.ndarray) -> None:
        """Saturating bulk add of ``counts[j]`` to counter ``indices[j]``.

        Saturating addition commutes, so the result equals applying the
        increments one at a time in any order.
        """
        indices = np.asarray(indices, dtype=np.intp)
        if indices.size == 0:
            return
        if indices.min() < 0 or indices.max() >= self.size:
            raise IndexError("counter index out of range")
        delta = np.zeros(self.size, dtype=np.uint64)
        np.add.at(delta, indices, np.asarray(counts, dtype=np.uint64))
        self.add_values(delta)

    def add_values(self, delta: np.ndarray) -> None:
        current = self.values()
        headroom = np.uint64(self.sat) - current
        self.assign(np.where(delta >= headroom, np.uint64(self.sat), current + delta))

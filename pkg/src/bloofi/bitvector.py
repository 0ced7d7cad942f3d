"""Fixed-length bit vectors packed into 64-bit little-endian words."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1

# A probe is a precomputed list of (word index, single-bit mask) pairs.
Probe = Sequence[tuple[int, int]]


def words_for(length_bits: int) -> int:
    return (length_bits + WORD_BITS - 1) // WORD_BITS


def _tail_mask(length_bits: int) -> int:
    rem = length_bits % WORD_BITS
    return _WORD_MASK if rem == 0 else (1 << rem) - 1


def make_probe(positions: Iterable[int]) -> list[tuple[int, int]]:
    """Turn bit positions into ``(word, mask)`` pairs for fast membership tests."""
    return [(p // WORD_BITS, 1 << (p % WORD_BITS)) for p in positions]


class BitVector:
    """A bit array of ``length_bits`` bits stored in a ``uint64`` numpy array.

    Bit ``i`` lives in word ``i // 64`` at bit ``i % 64``. Padding bits of the
    last word are kept at zero by every mutating operation.
    """

    __slots__ = ("words", "length_bits")

    def __init__(self, length_bits: int, words: np.ndarray | None = None):
        if length_bits < 1:
            raise ValueError("length_bits must be positive")
        n = words_for(length_bits)
        if words is None:
            words = np.zeros(n, dtype=np.uint64)
        else:
            words = np.asarray(words, dtype=np.uint64)
            if words.shape != (n,):
                raise ValueError(
                    f"expected {n} words for {length_bits} bits, got shape {words.shape}"
                )
            if int(words[-1]) & ~_tail_mask(length_bits) & _WORD_MASK:
                raise ValueError("padding bits beyond length_bits must be zero")
        self.words = words
        self.length_bits = length_bits

    # construction -------------------------------------------------------

    @classmethod
    def from_positions(cls, length_bits: int, positions: Iterable[int]) -> "BitVector":
        bv = cls(length_bits)
        for p in positions:
            bv.set(p)
        return bv

    @classmethod
    def from_string(cls, bits: str) -> "BitVector":
        """Parse ``"00101000"``; the leftmost character is bit 0."""
        bv = cls(len(bits))
        for i, c in enumerate(bits):
            if c == "1":
                bv.set(i)
            elif c != "0":
                raise ValueError(f"invalid bit character {c!r}")
        return bv

    @classmethod
    def ones(cls, length_bits: int) -> "BitVector":
        bv = cls(length_bits)
        bv.words[:] = np.uint64(_WORD_MASK)
        bv.words[-1] = np.uint64(_tail_mask(length_bits))
        return bv

    def copy(self) -> "BitVector":
        return BitVector(self.length_bits, self.words.copy())

    # single bits --------------------------------------------------------

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.length_bits:
            raise IndexError(f"bit {i} out of range [0, {self.length_bits})")

    def get(self, i: int) -> bool:
        self._check_index(i)
        return bool(int(self.words[i // WORD_BITS]) >> (i % WORD_BITS) & 1)

    def set(self, i: int) -> None:
        self._check_index(i)
        self.words[i // WORD_BITS] |= np.uint64(1 << (i % WORD_BITS))

    def clear(self, i: int) -> None:
        self._check_index(i)
        self.words[i // WORD_BITS] &= np.uint64(~(1 << (i % WORD_BITS)) & _WORD_MASK)

    def test_probe(self, probe: Probe) -> bool:
        """True when every bit named by ``probe`` is set."""
        words = self.words
        for w, mask in probe:
            if not int(words[w]) & mask:
                return False
        return True

    # whole-vector operations -------------------------------------------

    def _require_same_length(self, other: "BitVector") -> None:
        if self.length_bits != other.length_bits:
            raise ValueError(
                f"length mismatch: {self.length_bits} vs {other.length_bits} bits"
            )

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def is_all_ones(self) -> bool:
        return self.popcount() == self.length_bits

    def is_zero(self) -> bool:
        return not self.words.any()

    def set_positions(self) -> np.ndarray:
        """Indices of set bits, ascending."""
        as_bytes = self.words.astype("<u8", copy=False).view(np.uint8)
        bits = np.unpackbits(as_bytes, bitorder="little")
        return np.flatnonzero(bits[: self.length_bits])

    def union_into(self, other: "BitVector") -> None:
        """In-place OR with ``other``."""
        self._require_same_length(other)
        np.bitwise_or(self.words, other.words, out=self.words)

    def is_subset_of(self, other: "BitVector") -> bool:
        self._require_same_length(other)
        return not np.any(self.words & ~other.words)

    def __or__(self, other: "BitVector") -> "BitVector":
        self._require_same_length(other)
        return BitVector(self.length_bits, self.words | other.words)

    def __and__(self, other: "BitVector") -> "BitVector":
        self._require_same_length(other)
        return BitVector(self.length_bits, self.words & other.words)

    def __xor__(self, other: "BitVector") -> "BitVector":
        self._require_same_length(other)
        return BitVector(self.length_bits, self.words ^ other.words)

    def __ior__(self, other: "BitVector") -> "BitVector":
        self.union_into(other)
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length_bits == other.length_bits and bool(
            np.array_equal(self.words, other.words)
        )

    __hash__ = None  # mutable

    def __len__(self) -> int:
        return self.length_bits

    def to_string(self) -> str:
        out = ["0"] * self.length_bits
        for p in self.set_positions():
            out[p] = "1"
        return "".join(out)

    def __repr__(self) -> str:
        if self.length_bits <= 64:
            return f"BitVector({self.to_string()!r})"
        return f"BitVector(length_bits={self.length_bits}, popcount={self.popcount()})"


def union_into(target: BitVector, source: BitVector) -> None:
    target.union_into(source)


def or_all(vectors: Sequence[BitVector]) -> BitVector:
    """Bitwise OR of a nonempty sequence of equal-length vectors."""
    if not vectors:
        raise ValueError("or_all needs at least one vector")
    out = vectors[0].copy()
    for v in vectors[1:]:
        out.union_into(v)
    return out

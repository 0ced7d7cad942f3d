"""Flat-Bloofi: bit-sliced storage of up to ``W`` filters per word array.

Word ``i`` of a slice array holds bit ``i`` of each of the ``W`` filters
stored there, so a query ANDs ``k`` words per array and reads every matching
filter off the set bits of the result.
"""

from __future__ import annotations

import numpy as np

from .bitvector import WORD_BITS, BitVector
from .bloom import BloomFilter, HashFamily
from .errors import InvariantError

_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}


class FlatBloofi:
    """Bit-sliced all-membership index.

    ``arrays[j]`` holds slots ``j*W .. j*W + W - 1``; ``beta[j]`` is the
    occupancy word of that array. ``word_bits`` is 64 in normal use and can
    be lowered to exercise array allocation and compaction on small inputs.
    """

    def __init__(self, family: HashFamily | None = None, word_bits: int = WORD_BITS):
        if word_bits not in _DTYPES:
            raise ValueError(f"word_bits must be one of {sorted(_DTYPES)}")
        self.word_bits = word_bits
        self._dtype = _DTYPES[word_bits]
        self._full = (1 << word_bits) - 1
        self.family = family
        self.arrays: list[np.ndarray] = []
        self.beta: list[int] = []
        self.id_to_slot: dict[int, int] = {}
        self.slot_to_id: list[int | None] = []
        self.words_read = 0

    def __len__(self) -> int:
        return len(self.id_to_slot)

    def __contains__(self, filter_id: int) -> bool:
        return filter_id in self.id_to_slot

    @property
    def zeta(self) -> int:
        return len(self.arrays)

    @property
    def capacity(self) -> int:
        """``L``, the number of slots."""
        return self.zeta * self.word_bits

    def storage_words(self) -> int:
        return sum(a.size for a in self.arrays)

    def _m(self) -> int:
        return self.family.m

    def _bits_of(self, bf: BloomFilter) -> BitVector:
        if self.family is None:
            self.family = bf.family
        elif bf.family != self.family:
            raise ValueError("filter uses a different hash family than the index")
        return bf.bits

    # ------------------------------------------------------------------

    def find_matches(self, element: int) -> set[int]:
        if not self.arrays:
            return set()
        return self.find_matches_positions(self.family.positions(element))

    def find_matches_positions(self, positions) -> set[int]:
        idx = np.asarray(positions, dtype=np.intp)
        out = set()
        W = self.word_bits
        for j, arr in enumerate(self.arrays):
            hit = int(np.bitwise_and.reduce(arr[idx])) & self.beta[j]
            self.words_read += idx.size
            base = j * W
            while hit:
                low = hit & -hit
                out.add(self.slot_to_id[base + low.bit_length() - 1])
                hit ^= low
        return out

    def _free_slot(self) -> int:
        for j, b in enumerate(self.beta):
            if b != self._full:
                free = ~b & (b + 1)
                return j * self.word_bits + free.bit_length() - 1
        self.arrays.append(np.zeros(self._m(), dtype=self._dtype))
        self.beta.append(0)
        self.slot_to_id.extend([None] * self.word_bits)
        return (len(self.arrays) - 1) * self.word_bits

    def _set_column(self, slot: int, bits: BitVector) -> None:
        j, s = divmod(slot, self.word_bits)
        rows = bits.set_positions()
        if rows.size:
            self.arrays[j][rows] |= self._dtype(1 << s)

    def column(self, slot: int) -> BitVector:
        """Reassemble the filter stored at ``slot``."""
        j, s = divmod(slot, self.word_bits)
        col = ((self.arrays[j] >> self._dtype(s)) & self._dtype(1)).astype(np.uint8)
        m = self._m()
        packed = np.packbits(col, bitorder="little")
        padded = np.zeros(-(-m // WORD_BITS) * 8, dtype=np.uint8)
        padded[: packed.size] = packed
        return BitVector(m, padded.view("<u8").astype(np.uint64))

    def insert(self, filter_id: int, bf: BloomFilter) -> None:
        if filter_id in self.id_to_slot:
            raise KeyError(f"filter id {filter_id} already indexed")
        bits = self._bits_of(bf)
        slot = self._free_slot()
        j, s = divmod(slot, self.word_bits)
        self.beta[j] |= 1 << s
        self.id_to_slot[filter_id] = slot
        self.slot_to_id[slot] = filter_id
        self._set_column(slot, bits)

    def delete(self, filter_id: int) -> None:
        try:
            slot = self.id_to_slot.pop(filter_id)
        except KeyError:
            raise KeyError(f"filter id {filter_id} is not indexed") from None
        W = self.word_bits
        j, s = divmod(slot, W)
        self.beta[j] &= ~(1 << s)
        self.slot_to_id[slot] = None
        if self.beta[j] == 0:
            del self.arrays[j]
            del self.beta[j]
            del self.slot_to_id[j * W:(j + 1) * W]
            for fid, other in self.id_to_slot.items():
                if other > slot:
                    self.id_to_slot[fid] = other - W
        else:
            self.arrays[j] &= self._dtype(~(1 << s) & self._full)

    def update(self, filter_id: int, bf: BloomFilter) -> None:
        """OR ``bf`` into the stored filter; ``bf`` must not clear any stored bit."""
        try:
            slot = self.id_to_slot[filter_id]
        except KeyError:
            raise KeyError(f"filter id {filter_id} is not indexed") from None
        bits = self._bits_of(bf)
        if not self.column(slot).is_subset_of(bits):
            raise ValueError("update would clear bits; in-place updates are OR-only")
        self._set_column(slot, bits)

    # ------------------------------------------------------------------

    def check_invariants(self) -> None:
        W = self.word_bits
        if len(self.beta) != len(self.arrays) or len(self.slot_to_id) != self.capacity:
            raise InvariantError("array, beta and slot table sizes disagree")
        if sum(b.bit_count() for b in self.beta) != len(self.id_to_slot):
            raise InvariantError("beta popcount differs from live filter count")
        for fid, slot in self.id_to_slot.items():
            if self.slot_to_id[slot] != fid:
                raise InvariantError(f"slot map is not inverse at id {fid}")
            if not self.beta[slot // W] >> (slot % W) & 1:
                raise InvariantError(f"slot {slot} of id {fid} not marked in beta")
        for j, arr in enumerate(self.arrays):
            if self.beta[j] == 0:
                raise InvariantError(f"array {j} is empty but retained")
            if arr.size != self._m():
                raise InvariantError(f"array {j} has {arr.size} words, expected m")
            stray = int(np.bitwise_or.reduce(arr)) & ~self.beta[j] & self._full
            if stray:
                raise InvariantError(f"array {j} has bits in unoccupied slots")
            for s in range(W):
                occupied = self.beta[j] >> s & 1
                if (self.slot_to_id[j * W + s] is not None) != bool(occupied):
                    raise InvariantError(f"slot {j * W + s} id entry disagrees with beta")

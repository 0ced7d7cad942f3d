"""Bloom filters over unsigned 64-bit integers with multiplicative hashing."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bitvector import WORD_BITS, BitVector, make_probe, words_for
from .errors import ParameterError

UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class FilterParams:
    k: int
    m: int
    n_exp: int
    rho_false: float


def _ceil(x: float) -> int:
    # absorb rounding noise so that e.g. -ln(0.25)/ln(2) stays 2
    return math.ceil(x - 1e-9)


def derive_params(n_exp: int, rho_false: float) -> FilterParams:
    """Pick ``k`` and ``m`` for ``n_exp`` elements at false-positive rate ``rho_false``.

    ``k = ceil(-ln(rho) / ln 2)`` and ``m = ceil(k / ln 2 * n_exp)``, with
    ``m`` then rounded up to a whole number of 64-bit words.
    """
    if not isinstance(n_exp, (int, np.integer)) or n_exp < 1:
        raise ParameterError(f"n_exp must be a positive integer, got {n_exp!r}")
    if not 0.0 < rho_false < 1.0:
        raise ParameterError(f"rho_false must lie in (0, 1), got {rho_false!r}")
    k = max(1, _ceil(-math.log(rho_false) / math.log(2)))
    m_raw = math.ceil(k / math.log(2) * n_exp)
    m = words_for(m_raw) * WORD_BITS
    return FilterParams(k=k, m=m, n_exp=int(n_exp), rho_false=float(rho_false))


def expected_fpp(params: FilterParams, n: int) -> float:
    """Approximate false-positive probability ``(1 - e^{-kn/m})^k`` with ``n`` elements."""
    if n < 0:
        raise ParameterError("element count must be nonnegative")
    return (1.0 - math.exp(-params.k * n / params.m)) ** params.k


@dataclass(frozen=True)
class HashFamily:
    """``k`` hash functions ``h_i(x) = (a_i * x mod 2**64) mod m`` with odd ``a_i``."""

    k: int
    m: int
    multipliers: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ParameterError("k and m must be positive")
        if len(self.multipliers) != self.k:
            raise ParameterError(f"need {self.k} multipliers, got {len(self.multipliers)}")
        for a in self.multipliers:
            if not 0 < a <= UINT64_MASK or a % 2 == 0:
                raise ParameterError(f"multiplier {a} is not an odd 64-bit integer")

    @classmethod
    def random(cls, k: int, m: int, seed: int | None = None) -> "HashFamily":
        rng = random.Random(seed)
        return cls(k, m, tuple(rng.getrandbits(64) | 1 for _ in range(k)))

    @classmethod
    def from_params(cls, params: FilterParams, seed: int | None = None) -> "HashFamily":
        return cls.random(params.k, params.m, seed)

    def positions(self, x: int) -> list[int]:
        if not 0 <= x <= UINT64_MASK:
            raise ValueError(f"element {x} is not an unsigned 64-bit integer")
        m = self.m
        return [(a * x & UINT64_MASK) % m for a in self.multipliers]

    def positions_array(self, xs) -> np.ndarray:
        """Hash many elements at once; returns shape ``(len(xs), k)``."""
        xs = np.asarray(xs, dtype=np.uint64)
        a = np.array(self.multipliers, dtype=np.uint64)
        # uint64 products wrap modulo 2**64, as intended
        return (xs[:, None] * a[None, :]) % np.uint64(self.m)

    def probe(self, x: int) -> list[tuple[int, int]]:
        return make_probe(self.positions(x))


class BloomFilter:
    """A Bloom filter: a ``BitVector`` of length ``family.m`` plus its hash family."""

    __slots__ = ("bits", "family")

    def __init__(self, family: HashFamily, bits: BitVector | None = None):
        if bits is None:
            bits = BitVector(family.m)
        elif bits.length_bits != family.m:
            raise ValueError(f"bit vector has {bits.length_bits} bits, family expects {family.m}")
        self.bits = bits
        self.family = family

    @classmethod
    def from_elements(cls, family: HashFamily, elements: Iterable[int]) -> "BloomFilter":
        bf = cls(family)
        bf.add_many(elements)
        return bf

    def add(self, x: int) -> None:
        for p in self.family.positions(x):
            self.bits.set(p)

    def add_many(self, elements) -> None:
        elements = np.fromiter(elements, dtype=np.uint64) if not isinstance(
            elements, np.ndarray
        ) else elements.astype(np.uint64, copy=False)
        if elements.size == 0:
            return
        pos = self.family.positions_array(elements).ravel()
        words = (pos // np.uint64(WORD_BITS)).astype(np.intp)
        masks = np.left_shift(np.uint64(1), pos % np.uint64(WORD_BITS))
        np.bitwise_or.at(self.bits.words, words, masks)

    def query(self, x: int) -> bool:
        return self.bits.test_probe(self.family.probe(x))

    __contains__ = query

    def copy(self) -> "BloomFilter":
        return BloomFilter(self.family, self.bits.copy())

    def union_into(self, other: "BloomFilter") -> None:
        if other.family != self.family:
            raise ValueError("filters use different hash families")
        self.bits.union_into(other.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return self.family == other.family and self.bits == other.bits

    __hash__ = None

    def __repr__(self) -> str:
        return f"BloomFilter(k={self.family.k}, m={self.family.m}, popcount={self.bits.popcount()})"


def add(bf: BloomFilter, element: int) -> None:
    bf.add(element)


def query(bf: BloomFilter, element: int) -> bool:
    return bf.query(element)

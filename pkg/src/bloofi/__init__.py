"""Indexes for the multidimensional Bloom filter problem: find every filter matching an element."""

from .bitvector import WORD_BITS, BitVector, union_into
from .bloom import BloomFilter, FilterParams, HashFamily, derive_params, expected_fpp
from .distance import Metric, distance
from .errors import FilterCorruptionError, FilterFormatError, InvariantError, ParameterError
from .filterio import read_collection, write_collection
from .flat import FlatBloofi
from .naive import NaiveIndex
from .tree import BloofiNode, BloofiTree

__all__ = [
    "WORD_BITS",
    "BitVector",
    "BloomFilter",
    "BloofiNode",
    "BloofiTree",
    "FilterCorruptionError",
    "FilterFormatError",
    "FilterParams",
    "FlatBloofi",
    "HashFamily",
    "InvariantError",
    "Metric",
    "NaiveIndex",
    "ParameterError",
    "derive_params",
    "distance",
    "expected_fpp",
    "read_collection",
    "union_into",
    "write_collection",
]

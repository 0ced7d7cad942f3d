"""Distances between equal-length bit vectors, used to place filters in the tree."""

from __future__ import annotations

import enum
import math

import numpy as np

from .bitvector import BitVector


class Metric(str, enum.Enum):
    HAMMING = "hamming"
    JACCARD = "jaccard"
    COSINE = "cosine"


def _popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def distance(a: BitVector, b: BitVector, metric: Metric | str = Metric.HAMMING) -> float:
    """Hamming, Jaccard or Cosine distance between ``a`` and ``b``.

    Jaccard and Cosine are 0 for two all-zero vectors and 1 when exactly one
    of them is all zero.
    """
    if a.length_bits != b.length_bits:
        raise ValueError(f"length mismatch: {a.length_bits} vs {b.length_bits} bits")
    metric = Metric(metric)
    if metric is Metric.HAMMING:
        return float(_popcount(a.words ^ b.words))
    if metric is Metric.JACCARD:
        union = _popcount(a.words | b.words)
        if union == 0:
            return 0.0
        return 1.0 - _popcount(a.words & b.words) / union
    na, nb = _popcount(a.words), _popcount(b.words)
    if na == 0 or nb == 0:
        return 0.0 if na == nb else 1.0
    return 1.0 - _popcount(a.words & b.words) / math.sqrt(na * nb)


def distances_to(matrix: np.ndarray, v: np.ndarray, metric: Metric | str) -> np.ndarray:
    """Distance from word vector ``v`` to every row of ``matrix`` (rows are word vectors).

    Vectorised counterpart of :func:`distance`, used by bulk construction.
    """
    metric = Metric(metric)
    if metric is Metric.HAMMING:
        return np.bitwise_count(matrix ^ v).sum(axis=1).astype(np.float64)
    inter = np.bitwise_count(matrix & v).sum(axis=1).astype(np.float64)
    if metric is Metric.JACCARD:
        union = np.bitwise_count(matrix | v).sum(axis=1).astype(np.float64)
        out = np.zeros_like(union)
        nz = union > 0
        out[nz] = 1.0 - inter[nz] / union[nz]
        return out
    rows = np.bitwise_count(matrix).sum(axis=1).astype(np.float64)
    nv = float(np.bitwise_count(v).sum())
    out = np.where(rows == nv, 0.0, 1.0) if nv == 0 else np.ones_like(rows)
    ok = (rows > 0) & (nv > 0)
    out[ok] = 1.0 - inter[ok] / np.sqrt(rows[ok] * nv)
    return out

"""Binary files holding one hash family and a collection of Bloom filters.

Layout, all integers little-endian::

    magic        4 bytes  b"BLMF"
    version      u16      1
    m            u64      filter length in bits
    k            u32      number of hash functions
    multipliers  k * u64
    count        u32      number of records
    records      count * (u64 filter id, ceil(m / 64) * u64 words)

Padding bits past ``m`` in the last word of each record must be zero.
"""

from __future__ import annotations

import os
import struct
from typing import BinaryIO, Sequence

import numpy as np

from .bitvector import BitVector, words_for
from .bloom import BloomFilter, HashFamily
from .errors import FilterCorruptionError, FilterFormatError, ParameterError

MAGIC = b"BLMF"
VERSION = 1

_PREFIX = struct.Struct("<4sHQI")
_U32 = struct.Struct("<I")


def header_size(k: int) -> int:
    return _PREFIX.size + 8 * k + _U32.size


def record_size(m: int) -> int:
    return 8 + 8 * words_for(m)


def encode_collection(family: HashFamily, filters: Sequence[tuple[int, BloomFilter]]) -> bytes:
    parts = [
        _PREFIX.pack(MAGIC, VERSION, family.m, family.k),
        struct.pack(f"<{family.k}Q", *family.multipliers),
        _U32.pack(len(filters)),
    ]
    for fid, bf in filters:
        if bf.family != family:
            raise ValueError(f"filter {fid} does not use the collection's hash family")
        if not 0 <= fid < 1 << 64:
            raise ValueError(f"filter id {fid} is not an unsigned 64-bit integer")
        parts.append(struct.pack("<Q", fid))
        parts.append(bf.bits.words.astype("<u8", copy=False).tobytes())
    return b"".join(parts)


def write_collection(
    path: str | os.PathLike, family: HashFamily, filters: Sequence[tuple[int, BloomFilter]]
) -> None:
    data = encode_collection(family, filters)
    with open(path, "wb") as fh:
        fh.write(data)


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FilterCorruptionError(f"truncated file while reading {what}")
    return buf


def read_collection_from(fh: BinaryIO) -> tuple[HashFamily, list[tuple[int, BloomFilter]]]:
    head = fh.read(_PREFIX.size)
    if len(head) < 6 or head[:4] != MAGIC:
        raise FilterFormatError("not a filter collection (bad magic)")
    if len(head) != _PREFIX.size:
        raise FilterCorruptionError("truncated header")
    _, version, m, k = _PREFIX.unpack(head)
    if version != VERSION:
        raise FilterFormatError(f"unsupported version {version}")
    multipliers = struct.unpack(f"<{k}Q", _read_exact(fh, 8 * k, "multipliers"))
    (count,) = _U32.unpack(_read_exact(fh, _U32.size, "filter count"))
    try:
        family = HashFamily(k, m, tuple(multipliers))
    except ParameterError as exc:
        raise FilterCorruptionError(f"invalid hash family: {exc}") from exc
    nwords = words_for(m)
    filters = []
    for i in range(count):
        (fid,) = struct.unpack("<Q", _read_exact(fh, 8, f"record {i} id"))
        raw = _read_exact(fh, 8 * nwords, f"record {i} words")
        words = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
        try:
            bits = BitVector(m, words)
        except ValueError as exc:
            raise FilterCorruptionError(f"record {i}: {exc}") from exc
        filters.append((fid, BloomFilter(family, bits)))
    if fh.read(1):
        raise FilterCorruptionError("trailing bytes after last record")
    return family, filters


def read_collection(path: str | os.PathLike) -> tuple[HashFamily, list[tuple[int, BloomFilter]]]:
    with open(path, "rb") as fh:
        return read_collection_from(fh)

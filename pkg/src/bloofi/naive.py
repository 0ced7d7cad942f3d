from __future__ import annotations

from .bitvector import Probe
from .bloom import BloomFilter


class NaiveIndex:
    """Linear scan over every filter; the ground truth for the other indexes.

    ``update`` replaces the stored filter outright.
    """

    def __init__(self):
        self.entries: dict[int, BloomFilter] = {}
        self.access_counter = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, filter_id: int) -> bool:
        return filter_id in self.entries

    def find_matches(self, element: int) -> set[int]:
        if not self.entries:
            return set()
        family = next(iter(self.entries.values())).family
        return self.find_matches_probe(family.probe(element))

    def find_matches_probe(self, probe: Probe) -> set[int]:
        self.access_counter += len(self.entries)
        return {fid for fid, bf in self.entries.items() if bf.bits.test_probe(probe)}

    def insert(self, filter_id: int, bf: BloomFilter) -> None:
        if filter_id in self.entries:
            raise KeyError(f"filter id {filter_id} already indexed")
        if self.entries:
            family = next(iter(self.entries.values())).family
            if bf.family != family:
                raise ValueError("filter uses a different hash family than the index")
        self.entries[filter_id] = bf.copy()

    def delete(self, filter_id: int) -> None:
        if filter_id not in self.entries:
            raise KeyError(f"filter id {filter_id} is not indexed")
        del self.entries[filter_id]

    def update(self, filter_id: int, bf: BloomFilter) -> None:
        if filter_id not in self.entries:
            raise KeyError(f"filter id {filter_id} is not indexed")
        self.entries[filter_id] = bf.copy()

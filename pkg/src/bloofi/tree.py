"""Bloofi: a B+-tree-like hierarchy of Bloom filters.

Leaves hold the indexed filters. Every inner node holds the bitwise OR of its
children, so a search can skip any subtree whose aggregate does not match.
Inner nodes have between ``d`` and ``2d`` children (the root between 2 and
``2d``), except that with the all-ones heuristic enabled a node whose value
is all ones is never split and may grow past ``2d``.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .bitvector import BitVector, Probe
from .bloom import BloomFilter, HashFamily
from .distance import Metric, distance, distances_to
from .errors import InvariantError


class BloofiNode:
    __slots__ = ("id", "val", "parent", "children")

    def __init__(self, node_id: int, val: BitVector, parent: "BloofiNode | None" = None):
        self.id = node_id
        self.val = val
        self.parent = parent
        self.children: list[BloofiNode] = []

    @property
    def nb_desc(self) -> int:
        return len(self.children)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:
        kind = "leaf" if self.is_leaf else f"inner/{len(self.children)}"
        return f"BloofiNode(id={self.id}, {kind}, val={self.val!r})"


class BloofiTree:
    """Hierarchical all-membership index over Bloom filters sharing one hash family.

    Parameters
    ----------
    order:
        Minimum fanout ``d`` of non-root inner nodes (maximum is ``2d``).
    metric:
        Distance used to pick the closest child on insert.
    heuristic:
        When true, nodes whose value is all ones are not split.
    family:
        Hash family of the indexed filters; taken from the first insert if omitted.
    """

    def __init__(
        self,
        order: int = 2,
        metric: Metric | str = Metric.HAMMING,
        heuristic: bool = True,
        family: HashFamily | None = None,
    ):
        if order < 2:
            raise ValueError("order must be at least 2")
        self.order = order
        self.metric = Metric(metric)
        self.heuristic = heuristic
        self.family = family
        self.root: BloofiNode | None = None
        self.id_to_leaf: dict[int, BloofiNode] = {}
        self.access_counter = 0
        self._inner_ids = itertools.count(1)

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.id_to_leaf)

    def __contains__(self, filter_id: int) -> bool:
        return filter_id in self.id_to_leaf

    def node_access_cost(self) -> int:
        return self.access_counter

    def reset_cost(self) -> None:
        self.access_counter = 0

    def _new_inner(self, val: BitVector) -> BloofiNode:
        return BloofiNode(-next(self._inner_ids), val)

    def _bits_of(self, bf: BloomFilter) -> BitVector:
        if self.family is None:
            self.family = bf.family
        elif bf.family != self.family:
            raise ValueError("filter uses a different hash family than the index")
        return bf.bits

    def _exempt(self, node: BloofiNode) -> bool:
        return self.heuristic and node.val.is_all_ones()

    def iter_nodes(self) -> Iterator[BloofiNode]:
        if self.root is None:
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list[BloofiNode]:
        """Leaves in left-to-right order."""
        return [n for n in self.iter_nodes() if n.is_leaf]

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def height(self) -> int:
        if self.root is None:
            return 0
        h, node = 0, self.root
        while node.children:
            node = node.children[0]
            h += 1
        return h

    def leaf_value(self, filter_id: int) -> BitVector:
        return self.id_to_leaf[filter_id].val

    # ------------------------------------------------------------------
    # search
    # ------------------------------------------------------------------

    def find_matches(self, element: int) -> set[int]:
        if self.root is None:
            return set()
        if self.family is None:
            raise ValueError("index has no hash family")
        return self.find_matches_probe(self.family.probe(element))

    def find_matches_probe(self, probe: Probe) -> set[int]:
        """Search with precomputed ``(word, mask)`` pairs for the element."""
        out: set[int] = set()
        if self.root is None:
            return out
        stack = [self.root]
        tested = 0
        while stack:
            node = stack.pop()
            tested += 1
            if not node.val.test_probe(probe):
                continue
            if node.children:
                stack.extend(reversed(node.children))
            else:
                out.add(node.id)
        self.access_counter += tested
        return out

    # ------------------------------------------------------------------
    # insert
    # ------------------------------------------------------------------

    def insert(self, filter_id: int, bf: BloomFilter) -> None:
        if filter_id in self.id_to_leaf:
            raise KeyError(f"filter id {filter_id} already indexed")
        bits = self._bits_of(bf)
        leaf = BloofiNode(filter_id, bits.copy())
        self.id_to_leaf[filter_id] = leaf
        self.access_counter += 1
        if self._attach_to_single(leaf):
            return
        self._attach(leaf, self._descend_closest(leaf.val))

    def _attach_to_single(self, leaf: BloofiNode) -> bool:
        """Handle the empty and single-leaf trees; True if ``leaf`` was placed."""
        if self.root is None:
            self.root = leaf
            return True
        if self.root.is_leaf:
            old = self.root
            new_root = self._new_inner(old.val | leaf.val)
            new_root.children = [old, leaf]
            old.parent = leaf.parent = new_root
            self.root = new_root
            self.access_counter += 2
            return True
        return False

    def _descend_closest(self, bits: BitVector) -> BloofiNode:
        """OR ``bits`` into each node on the way down; return the closest leaf."""
        node = self.root
        metric = self.metric
        while node.children:
            node.val.union_into(bits)
            self.access_counter += 1
            best, best_d = None, None
            for child in node.children:
                dist = distance(child.val, bits, metric)
                if best_d is None or dist < best_d:
                    best, best_d = child, dist
            self.access_counter += len(node.children)
            node = best
        return node

    def _descend_rightmost(self, bits: BitVector) -> BloofiNode:
        node = self.root
        while node.children:
            node.val.union_into(bits)
            self.access_counter += 1
            node = node.children[-1]
        return node

    def _attach(self, leaf: BloofiNode, target: BloofiNode) -> None:
        """Insert ``leaf`` right after ``target`` and propagate any splits upward."""
        node = target.parent
        new_sibling = self._insert_into_parent(leaf, target)
        while new_sibling is not None:
            if node.parent is None:
                new_root = self._new_inner(node.val | new_sibling.val)
                new_root.children = [node, new_sibling]
                node.parent = new_sibling.parent = new_root
                self.root = new_root
                self.access_counter += 1
                return
            parent = node.parent
            new_sibling = self._insert_into_parent(new_sibling, node)
            node = parent

    def _insert_into_parent(self, entry: BloofiNode, node: BloofiNode) -> BloofiNode | None:
        parent = node.parent
        idx = parent.children.index(node)
        parent.children.insert(idx + 1, entry)
        entry.parent = parent
        self.access_counter += 2
        if len(parent.children) <= 2 * self.order or self._exempt(parent):
            return None
        return self._split(parent)

    def _split(self, node: BloofiNode) -> BloofiNode:
        """Move the last ``d`` children of ``node`` into a new node and return it."""
        d = self.order
        moved = node.children[-d:]
        del node.children[-d:]
        sibling = self._new_inner(_or_children(moved))
        sibling.children = moved
        for child in moved:
            child.parent = sibling
        node.val = _or_children(node.children)
        self.access_counter += 2 + len(node.children) + len(moved)
        return sibling

    # ------------------------------------------------------------------
    # delete
    # ------------------------------------------------------------------

    def delete(self, filter_id: int) -> None:
        try:
            leaf = self.id_to_leaf.pop(filter_id)
        except KeyError:
            raise KeyError(f"filter id {filter_id} is not indexed") from None
        self.access_counter += 1
        if leaf is self.root:
            self.root = None
            return
        self._delete_node(leaf)

    def _delete_node(self, child: BloofiNode) -> None:
        parent = child.parent
        parent.children.remove(child)
        child.parent = None
        self.access_counter += 1
        if parent is self.root:
            if len(parent.children) == 1:
                self.root = parent.children[0]
                self.root.parent = None
                self.access_counter += 1
                return
            self._recompute_to_root(parent)
            return
        if len(parent.children) >= self.order:
            self._recompute_to_root(parent)
            return
        sibling, right = self._pick_sibling(parent)
        if len(sibling.children) > self.order:
            self._redistribute(parent, sibling, right)
            sibling.val = _or_children(sibling.children)
            self.access_counter += 1 + len(sibling.children)
            self._split_overfull(sibling)
            self._recompute_to_root(parent)
        else:
            moved = parent.children
            parent.children = []
            if right:
                sibling.children[:0] = moved
            else:
                sibling.children.extend(moved)
            for c in moved:
                c.parent = sibling
            sibling.val = _or_children(sibling.children)
            self.access_counter += 1 + len(sibling.children)
            self._delete_node(parent)

    def _pick_sibling(self, node: BloofiNode) -> tuple[BloofiNode, bool]:
        siblings = node.parent.children
        idx = siblings.index(node)
        self.access_counter += 1
        if idx + 1 < len(siblings):
            return siblings[idx + 1], True
        return siblings[idx - 1], False

    def _redistribute(self, node: BloofiNode, sibling: BloofiNode, right: bool) -> None:
        t, s = len(node.children), len(sibling.children)
        count = min((s - t) // 2, 2 * self.order - t)
        if right:
            moved = sibling.children[:count]
            del sibling.children[:count]
            node.children.extend(moved)
        else:
            moved = sibling.children[s - count:]
            del sibling.children[s - count:]
            node.children[:0] = moved
        for c in moved:
            c.parent = node
        self.access_counter += len(moved)

    def _recompute_to_root(self, node: BloofiNode | None) -> None:
        while node is not None:
            node.val = _or_children(node.children)
            self.access_counter += 1 + len(node.children)
            self._split_overfull(node)
            node = node.parent

    def _split_overfull(self, node: BloofiNode) -> None:
        """Split a node that outgrew ``2d`` children once it is no longer all ones.

        Only nodes that the heuristic let grow can reach this state; the new
        siblings are handed to the parent, whose own fanout is checked when
        the caller walks upward.
        """
        while len(node.children) > 2 * self.order and not self._exempt(node):
            sibling = self._split(node)
            if node.parent is None:
                new_root = self._new_inner(node.val | sibling.val)
                new_root.children = [node]
                node.parent = new_root
                self.root = new_root
            parent = node.parent
            parent.children.insert(parent.children.index(node) + 1, sibling)
            sibling.parent = parent

    # ------------------------------------------------------------------
    # update
    # ------------------------------------------------------------------

    def update(self, filter_id: int, bf: BloomFilter) -> None:
        """OR ``bf`` into the leaf and all its ancestors.

        ``bf`` must contain every bit already set in the stored filter; use
        :meth:`rebuild` to shrink filters.
        """
        try:
            leaf = self.id_to_leaf[filter_id]
        except KeyError:
            raise KeyError(f"filter id {filter_id} is not indexed") from None
        bits = self._bits_of(bf)
        if not leaf.val.is_subset_of(bits):
            raise ValueError("update would clear bits; in-place updates are OR-only")
        node = leaf
        while node is not None:
            node.val.union_into(bits)
            self.access_counter += 1
            node = node.parent

    # ------------------------------------------------------------------
    # reconstruction
    # ------------------------------------------------------------------

    def rebuild(self, replacements: Mapping[int, BloomFilter] | None = None) -> None:
        """Rebuild the tree from scratch by iterative insertion.

        ``replacements`` substitutes new filters (which may clear bits) for
        the given ids before reinsertion.
        """
        replacements = dict(replacements or {})
        unknown = set(replacements) - set(self.id_to_leaf)
        if unknown:
            raise KeyError(f"unknown filter ids {sorted(unknown)}")
        items = []
        for leaf in self.leaves():
            bf = replacements.get(leaf.id)
            items.append((leaf.id, bf if bf is not None else BloomFilter(self.family, leaf.val)))
        self.root = None
        self.id_to_leaf = {}
        for fid, bf in items:
            self.insert(fid, bf)

    @classmethod
    def bulk_build(
        cls,
        filters: Sequence[tuple[int, BloomFilter]],
        order: int = 2,
        metric: Metric | str = Metric.HAMMING,
        heuristic: bool = True,
    ) -> "BloofiTree":
        """Build from a greedy nearest-neighbour ordering of ``filters``.

        The first filter is the one closest to the empty filter, each next one
        the closest remaining filter to its predecessor. Filters are then
        appended after the right-most leaf.
        """
        if not filters:
            raise ValueError("bulk_build needs at least one filter")
        family = filters[0][1].family
        tree = cls(order=order, metric=metric, heuristic=heuristic, family=family)
        for fid, bf in chain_order(filters, metric):
            if fid in tree.id_to_leaf:
                raise KeyError(f"duplicate filter id {fid}")
            leaf = BloofiNode(fid, tree._bits_of(bf).copy())
            tree.id_to_leaf[fid] = leaf
            if not tree._attach_to_single(leaf):
                tree._attach(leaf, tree._descend_rightmost(leaf.val))
        tree.reset_cost()
        return tree

    @classmethod
    def from_layout(
        cls,
        layout,
        family: HashFamily,
        order: int = 2,
        metric: Metric | str = Metric.HAMMING,
        heuristic: bool = True,
    ) -> "BloofiTree":
        """Assemble a tree with an explicit shape.

        ``layout`` is either a leaf ``(filter_id, BloomFilter)`` or a list of
        sub-layouts. Inner values are computed as ORs of their children.
        """
        tree = cls(order=order, metric=metric, heuristic=heuristic, family=family)

        def build(spec) -> BloofiNode:
            if isinstance(spec, tuple):
                fid, bf = spec
                leaf = BloofiNode(fid, tree._bits_of(bf).copy())
                if fid in tree.id_to_leaf:
                    raise KeyError(f"duplicate filter id {fid}")
                tree.id_to_leaf[fid] = leaf
                return leaf
            children = [build(s) for s in spec]
            node = tree._new_inner(_or_children(children))
            node.children = children
            for c in children:
                c.parent = node
            return node

        tree.root = build(layout)
        return tree

    # ------------------------------------------------------------------
    # self-checks
    # ------------------------------------------------------------------

    def check_invariants(self, check_values: bool = True, strict_height: bool = False) -> None:
        """Raise :class:`InvariantError` if the tree is malformed.

        The height is always checked against ``1 + floor(log_d(N / 2))``, which
        follows from the fanout rules; ``strict_height`` checks the tighter
        ``floor(log_d N)`` instead, which only holds for some ``N`` when ``d > 2``.
        """
        n = len(self.id_to_leaf)
        d = self.order
        if self.root is None:
            if n:
                raise InvariantError("empty tree but id map is not empty")
            return
        if self.root.parent is not None:
            raise InvariantError("root has a parent")
        leaf_depths = set()
        seen_leaves = 0
        nodes = 0
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            nodes += 1
            if node.is_leaf:
                seen_leaves += 1
                leaf_depths.add(depth)
                if self.id_to_leaf.get(node.id) is not node:
                    raise InvariantError(f"leaf {node.id} missing from id map")
                continue
            c = len(node.children)
            low = 2 if node is self.root else d
            if c < low:
                raise InvariantError(f"node {node.id} has {c} children, fewer than {low}")
            if c > 2 * d and not self._exempt(node):
                raise InvariantError(f"node {node.id} has {c} children, more than {2 * d}")
            for child in node.children:
                if child.parent is not node:
                    raise InvariantError(f"child {child.id} does not point back to {node.id}")
                stack.append((child, depth + 1))
            if check_values and node.val != _or_children(node.children):
                raise InvariantError(f"node {node.id} value is not the OR of its children")
        if seen_leaves != n:
            raise InvariantError(f"reachable leaves {seen_leaves} != indexed filters {n}")
        if len(leaf_depths) != 1:
            raise InvariantError(f"leaves at different depths {sorted(leaf_depths)}")
        if n >= 2:
            if nodes > node_count_bound(n, d):
                raise InvariantError(f"{nodes} nodes exceeds bound {node_count_bound(n, d)}")
            h = leaf_depths.pop()
            limit = height_bound(n, d) if strict_height else 1 + _floor_log(n // 2, d)
            if h > limit:
                raise InvariantError(f"height {h} exceeds bound {limit} for N={n}, d={d}")
        elif not self.root.is_leaf:
            raise InvariantError("single filter must be the root leaf")


def _or_children(children: Sequence[BloofiNode]) -> BitVector:
    if len(children) == 1:
        return children[0].val.copy()
    words = np.bitwise_or.reduce([c.val.words for c in children], axis=0)
    return BitVector(children[0].val.length_bits, words)


def _floor_log(n: int, base: int) -> int:
    """Exact ``floor(log_base(n))`` for ``n >= 1``."""
    h, p = 0, base
    while p <= n:
        h += 1
        p *= base
    return h


def node_count_bound(n: int, d: int) -> int:
    """``ceil(N + (N - 1) / (d - 1))``, the maximum number of nodes."""
    return n + -(-(n - 1) // (d - 1))


def height_bound(n: int, d: int) -> int:
    """``floor(log_d N)``."""
    return _floor_log(n, d)


def chain_order(
    filters: Sequence[tuple[int, BloomFilter]], metric: Metric | str = Metric.HAMMING
) -> list[tuple[int, BloomFilter]]:
    """Greedy nearest-neighbour chain starting from the empty filter, O(N^2).

    Ties go to the earliest remaining filter.
    """
    if not filters:
        return []
    matrix = np.stack([bf.bits.words for _, bf in filters])
    remaining = np.ones(len(filters), dtype=bool)
    current = np.zeros(matrix.shape[1], dtype=np.uint64)
    out = []
    for _ in range(len(filters)):
        dist = distances_to(matrix, current, metric)
        dist[~remaining] = np.inf
        i = int(np.argmin(dist))
        remaining[i] = False
        out.append(filters[i])
        current = matrix[i]
    return out


def build_iterative(
    filters: Iterable[tuple[int, BloomFilter]],
    order: int = 2,
    metric: Metric | str = Metric.HAMMING,
    heuristic: bool = True,
) -> BloofiTree:
    tree = BloofiTree(order=order, metric=metric, heuristic=heuristic)
    for fid, bf in filters:
        tree.insert(fid, bf)
    tree.reset_cost()
    return tree

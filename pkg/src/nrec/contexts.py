"""Context extraction for BR symbols: the DCT-style baseline and the
condition trees over correlated/orthogonal neighborhoods.

All schemes expose ``context_id(levels, scan_index)`` mapping a position
inside a fully known block to a model context; in reverse-scan coding
order the bottom-right neighbors a context reads are already decoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dictionary import PartitionedDictionary, split_neighborhood
from .scan import zigzag

Offset = tuple[int, int]

# Causal neighborhoods of the DCT-style baseline.
BR_NEIGHBORHOOD: tuple[Offset, ...] = ((0, 1), (1, 0), (1, 1), (0, 2), (2, 0))
LR_NEIGHBORHOOD: tuple[Offset, ...] = ((0, 1), (1, 0), (1, 1))

C3_MAX = 12
FULL_NC_MIN = 3   # a fully occupied correlated set of this size is its own context

N_REGIONS = 4     # DC plus three anti-diagonal bands
N_SUM_CATEGORIES = 5


def neighborhood_sum(levels: np.ndarray, u: int, v: int, offsets: Sequence[Offset]) -> int:
    h, w = levels.shape
    total = 0
    for du, dv in offsets:
        uu, vv = u + du, v + dv
        if uu < w and vv < h:
            total += abs(int(levels[vv, uu]))
    return total


def sum_category(total: int) -> int:
    """Ranges 0, {1,2}, {3,4}, {5,6}, >=7."""
    if total >= 7:
        return 4
    return (total + 1) // 2


def region_class(u: int, v: int, width: int, height: int) -> int:
    """DC, then three frequency bands by anti-diagonal index."""
    if u == 0 and v == 0:
        return 0
    d = u + v
    if d <= 2:
        return 1
    if d <= (width + height) // 4:
        return 2
    return 3


def ctx_baseline(levels: np.ndarray, u: int, v: int) -> int:
    """Baseline BR context: dedicated DC, else (band, neighbor-sum range)."""
    h, w = levels.shape
    region = region_class(u, v, w, h)
    if region == 0:
        return 0
    cat = sum_category(neighborhood_sum(levels, u, v, BR_NEIGHBORHOOD))
    return 1 + (region - 1) * N_SUM_CATEGORIES + cat


BASELINE_CONTEXTS = 1 + (N_REGIONS - 1) * N_SUM_CATEGORIES


def ctx_lr(levels: np.ndarray, u: int, v: int) -> int:
    h, w = levels.shape
    region = region_class(u, v, w, h)
    cat = sum_category(neighborhood_sum(levels, u, v, LR_NEIGHBORHOOD))
    return region * N_SUM_CATEGORIES + cat


LR_CONTEXTS = N_REGIONS * N_SUM_CATEGORIES


def leaf_count(nc_size: int) -> int:
    """Leaves of the full condition tree, including the all-zero leaf."""
    if nc_size < 0:
        raise ValueError("nc size must be >= 0")
    if nc_size < FULL_NC_MIN:
        return 1 + (nc_size + 1) * (C3_MAX + 1)
    return 1 + nc_size * (C3_MAX + 1) + 1


@dataclass
class ContextTree:
    """Leaf structure over the conditions (all-zero, occupancy, l1 norm).

    Leaf 0 is the all-zero leaf.  Each occupancy value owns a list of
    half-open l1 intervals; a fully occupied correlated set of size >= 3
    collapses to a dedicated leaf without l1 branching.
    """

    nc: tuple[Offset, ...]
    no: tuple[Offset, ...]
    kind: str = "full"
    intervals: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    _starts: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.intervals:
            n_branching = len(self.nc) if self.has_full_leaf else len(self.nc) + 1
            self.intervals = {
                c2: [(c3, c3) for c3 in range(C3_MAX + 1)] for c2 in range(n_branching)
            }
        self._reindex()

    @property
    def has_full_leaf(self) -> bool:
        return len(self.nc) >= FULL_NC_MIN

    def _reindex(self):
        self._starts = {}
        base = 1
        for c2 in sorted(self.intervals):
            self._starts[c2] = base
            base += len(self.intervals[c2])
        self._full_leaf_id = base if self.has_full_leaf else None

    @property
    def n_leaves(self) -> int:
        n = 1 + sum(len(v) for v in self.intervals.values())
        return n + 1 if self.has_full_leaf else n

    def leaf_id(self, c1_zero: bool, c2: int, c3: int) -> int:
        if c1_zero:
            return 0
        if self.has_full_leaf and c2 == len(self.nc):
            return self._full_leaf_id
        assert not (c2 == 0 and c3 == 0), "unreachable leaf (no nonzero evidence)"
        spans = self.intervals[c2]
        c3 = min(c3, C3_MAX)
        for i, (lo, hi) in enumerate(spans):
            if lo <= c3 <= hi:
                return self._starts[c2] + i
        raise AssertionError(f"l1 value {c3} not covered by intervals of node {c2}")

    def describe(self) -> list:
        out = [("c1",)]
        for c2 in sorted(self.intervals):
            out.extend(("c2c3", c2, lo, hi) for lo, hi in self.intervals[c2])
        if self.has_full_leaf:
            out.append(("full",))
        return out

    def lookup_table(self) -> np.ndarray:
        """Leaf id per (occupancy, clipped l1), for vectorized extraction."""
        n_branching = len(self.intervals)
        table = np.zeros((max(n_branching, 1), C3_MAX + 1), dtype=np.int64)
        for c2 in self.intervals:
            for i, (lo, hi) in enumerate(self.intervals[c2]):
                table[c2, lo:hi + 1] = self._starts[c2] + i
        return table

    @property
    def full_leaf_id(self):
        return self._full_leaf_id


def tree_features(
    levels: np.ndarray, u: int, v: int, nc: Sequence[Offset], no: Sequence[Offset]
) -> tuple[bool, int, int]:
    """(all-neighborhood-zero, occupancy of nc, clipped l1 of no)."""
    h, w = levels.shape
    c2 = 0
    for du, dv in nc:
        uu, vv = u + du, v + dv
        if uu < w and vv < h and levels[vv, uu] != 0:
            c2 += 1
    no_sum = neighborhood_sum(levels, u, v, no)
    c1_zero = c2 == 0 and no_sum == 0
    return c1_zero, c2, min(no_sum, C3_MAX)


def _batch_abs_sum(blocks: np.ndarray, u: int, v: int, offsets) -> np.ndarray:
    _, h, w = blocks.shape
    out = np.zeros(len(blocks), dtype=np.int64)
    for du, dv in offsets:
        if u + du < w and v + dv < h:
            out += np.abs(blocks[:, v + dv, u + du].astype(np.int64))
    return out


def _batch_nonzero(blocks: np.ndarray, u: int, v: int, offsets) -> np.ndarray:
    _, h, w = blocks.shape
    out = np.zeros(len(blocks), dtype=np.int64)
    for du, dv in offsets:
        if u + du < w and v + dv < h:
            out += blocks[:, v + dv, u + du] != 0
    return out


class Scheme:
    """Base interface: a position-aware mapping from blocks to context ids."""

    name = "scheme"
    n_contexts: int
    width: int
    height: int

    def context_id(self, levels: np.ndarray, scan_index: int) -> int:
        raise NotImplementedError

    def context_ids(self, blocks: np.ndarray) -> np.ndarray:
        """Context id per (block, scan position) for a (N, H, W) batch."""
        out = np.empty((len(blocks), len(self.scan)), dtype=np.int64)
        for i in range(len(self.scan)):
            out[:, i] = self._batch_at(blocks, i)
        return out

    def _batch_at(self, blocks: np.ndarray, scan_index: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def scan(self):
        return zigzag(self.width, self.height)


class BaselineScheme(Scheme):
    """DCT-style contexter; per_position trains one model per scan slot."""

    def __init__(self, width: int, height: int, per_position: bool = True):
        self.width = width
        self.height = height
        self.per_position = per_position
        n = len(self.scan)
        self.name = "baseline" + ("" if per_position else "-pooled")
        self.n_contexts = n * BASELINE_CONTEXTS if per_position else BASELINE_CONTEXTS

    def context_id(self, levels: np.ndarray, scan_index: int) -> int:
        u, v = self.scan[scan_index]
        ctx = ctx_baseline(levels, u, v)
        if self.per_position:
            return scan_index * BASELINE_CONTEXTS + ctx
        return ctx

    def _batch_at(self, blocks: np.ndarray, scan_index: int) -> np.ndarray:
        u, v = self.scan[scan_index]
        region = region_class(u, v, self.width, self.height)
        if region == 0:
            ctx = np.zeros(len(blocks), dtype=np.int64)
        else:
            s = _batch_abs_sum(blocks, u, v, BR_NEIGHBORHOOD)
            cat = np.minimum((s + 1) // 2, 4)
            ctx = 1 + (region - 1) * N_SUM_CATEGORIES + cat
        if self.per_position:
            ctx = ctx + scan_index * BASELINE_CONTEXTS
        return ctx


class TreeScheme(Scheme):
    """One condition tree per scan position (full or merged)."""

    def __init__(self, d: PartitionedDictionary, n_nbd: int, th_c: float,
                 trees: Optional[list[ContextTree]] = None):
        self.dictionary = d
        self.width = d.width
        self.height = d.height
        self.n_nbd = n_nbd
        self.th_c = th_c
        if trees is None:
            trees = []
            for (u, v) in self.scan:
                part = split_neighborhood(d, (u, v), n_nbd, th_c)
                trees.append(ContextTree(part.nc, part.no))
        self.trees = trees
        self.offsets = np.cumsum([0] + [t.n_leaves for t in trees])
        self.n_contexts = int(self.offsets[-1])
        self.name = "ct-f" if all(t.kind == "full" for t in trees) else "ct-m"

    def context_id(self, levels: np.ndarray, scan_index: int) -> int:
        u, v = self.scan[scan_index]
        tree = self.trees[scan_index]
        c1, c2, c3 = tree_features(levels, u, v, tree.nc, tree.no)
        return int(self.offsets[scan_index]) + tree.leaf_id(c1, c2, c3)

    def _batch_at(self, blocks: np.ndarray, scan_index: int) -> np.ndarray:
        u, v = self.scan[scan_index]
        tree = self.trees[scan_index]
        return _batch_tree_leaf(blocks, u, v, tree, tree.nc, tree.no) + int(
            self.offsets[scan_index]
        )

    def with_trees(self, trees: list[ContextTree]) -> "TreeScheme":
        return TreeScheme(self.dictionary, self.n_nbd, self.th_c, trees)


def _batch_tree_leaf(blocks, u, v, tree: ContextTree, nc, no) -> np.ndarray:
    """Vectorized local leaf ids for one position."""
    c2 = _batch_nonzero(blocks, u, v, nc)
    no_sum = _batch_abs_sum(blocks, u, v, no)
    c1 = (c2 == 0) & (no_sum == 0)
    c3 = np.minimum(no_sum, C3_MAX)
    table = tree.lookup_table()
    n_branching = len(tree.intervals)
    c2_idx = np.minimum(c2, n_branching - 1)
    leaf = table[c2_idx, c3]
    if tree.has_full_leaf:
        # (c2 may not reach len(nc) near edges, where offsets fall outside.)
        in_bounds = [(du, dv) for du, dv in nc
                     if u + du < blocks.shape[2] and v + dv < blocks.shape[1]]
        if len(in_bounds) == len(tree.nc):
            leaf = np.where(c2 == len(tree.nc), tree.full_leaf_id, leaf)
    bad = ~c1 & (c2 == 0) & (c3 == 0)
    assert not bad.any(), "unreachable leaf (no nonzero evidence)"
    return np.where(c1, 0, leaf)


class SimplifiedScheme(Scheme):
    """Grouped contexter: positions pool into (band, occupancy-class) groups
    that share stored correlated-offset templates and one merged tree each."""

    name = "ct-s"

    def __init__(
        self,
        d: PartitionedDictionary,
        n_nbd: int,
        th_c: float,
        group_of_position: list[int],
        group_trees: dict[int, ContextTree],
        templates: dict[int, tuple[Offset, ...]],
        template_of_group: dict[int, int],
    ):
        self.dictionary = d
        self.width = d.width
        self.height = d.height
        self.n_nbd = n_nbd
        self.th_c = th_c
        self.group_of_position = group_of_position
        self.group_trees = group_trees
        self.templates = templates
        self.template_of_group = template_of_group
        gids = sorted(group_trees)
        self.offsets = {}
        base = 0
        for gid in gids:
            self.offsets[gid] = base
            base += group_trees[gid].n_leaves
        self.n_contexts = base
        self._no_of_position = []
        for i, (u, v) in enumerate(self.scan):
            tree = group_trees[group_of_position[i]]
            nt = [
                (du, dv)
                for dv in range(n_nbd + 1)
                for du in range(n_nbd + 1 - dv)
                if 0 < du + dv <= n_nbd and u + du < self.width and v + dv < self.height
            ]
            self._no_of_position.append(
                tuple(off for off in nt if off not in set(tree.nc)))

    def features_at(self, levels: np.ndarray, scan_index: int) -> tuple[int, bool, int, int]:
        u, v = self.scan[scan_index]
        gid = self.group_of_position[scan_index]
        tree = self.group_trees[gid]
        c1, c2, c3 = tree_features(
            levels, u, v, tree.nc, self._no_of_position[scan_index])
        return gid, c1, c2, c3

    def context_id(self, levels: np.ndarray, scan_index: int) -> int:
        gid, c1, c2, c3 = self.features_at(levels, scan_index)
        return self.offsets[gid] + self.group_trees[gid].leaf_id(c1, c2, c3)

    def _batch_at(self, blocks: np.ndarray, scan_index: int) -> np.ndarray:
        u, v = self.scan[scan_index]
        gid = self.group_of_position[scan_index]
        tree = self.group_trees[gid]
        leaf = _batch_tree_leaf(blocks, u, v, tree, tree.nc, self._no_of_position[scan_index])
        return leaf + self.offsets[gid]

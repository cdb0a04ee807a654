"""Training of conditional BR models, entropy-guided tree merging, and
cross conditional-entropy evaluation.

Counts accumulate per (context, BR symbol); models derive probabilities
with add-half smoothing (or raw frequencies for the plug-in identities),
falling back to the pooled distribution for contexts never seen in
training.  The merged trees reduce leaf counts while the measured system
conditional-entropy increase stays below a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contexts import (
    C3_MAX,
    ContextTree,
    Scheme,
    SimplifiedScheme,
    TreeScheme,
    region_class,
)
from .dictionary import PartitionedDictionary, split_neighborhood
from .scan import zigzag

PROB_FLOOR = 1.0 / (1 << 15)

SWEEP_N_NBD = (2, 3, 4)
SWEEP_TH_C = (0.09, 0.15, 0.2, 0.25)


def br_symbols(blocks: np.ndarray, scan) -> np.ndarray:
    """BR symbol per (block, scan position)."""
    cols = np.fromiter((u for u, _ in scan), dtype=np.int64)
    rows = np.fromiter((v for _, v in scan), dtype=np.int64)
    return np.minimum(np.abs(blocks[:, rows, cols].astype(np.int64)), 3)


def train(scheme: Scheme, blocks: np.ndarray) -> np.ndarray:
    """Accumulate BR counts per context over a block batch.

    Counts are additive so dataset order never matters; contexts read only
    bottom-right neighbors, which precede each position in coding order.
    """
    blocks = np.asarray(blocks)
    ctx = scheme.context_ids(blocks)
    br = br_symbols(blocks, scheme.scan)
    flat = np.bincount(
        (ctx * 4 + br).ravel(), minlength=4 * scheme.n_contexts
    )
    return flat.reshape(scheme.n_contexts, 4).astype(np.int64)


class ProbabilityModel:
    """Per-context categorical distribution over the BR alphabet."""

    def __init__(self, counts: np.ndarray, smoothing: str = "kt"):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 2 or counts.shape[1] != 4:
            raise ValueError("counts must be (n_contexts, 4)")
        self.counts = counts
        self.smoothing = smoothing
        totals = counts.sum(axis=1)
        pooled = counts.sum(axis=0)
        if smoothing == "kt":
            self.probs = (counts + 0.5) / (totals + 2.0)[:, None]
            global_probs = (pooled + 0.5) / (pooled.sum() + 2.0)
        elif smoothing == "mle":
            safe = np.where(totals > 0, totals, 1.0)
            self.probs = counts / safe[:, None]
            global_probs = (
                pooled / pooled.sum() if pooled.sum() > 0 else np.full(4, 0.25)
            )
        else:
            raise ValueError(f"unknown smoothing {smoothing!r}")
        self.probs[totals == 0] = global_probs
        if smoothing == "kt":
            self.probs = np.maximum(self.probs, PROB_FLOOR)
            self.probs /= self.probs.sum(axis=1, keepdims=True)

    def log2_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(self.probs)

    def cdf15(self, ctx: int) -> np.ndarray:
        """15-bit fixed-point CDF with every symbol at least one unit."""
        p = self.probs[ctx]
        freq = np.maximum(np.round(p * (1 << 15)).astype(np.int64), 1)
        excess = int(freq.sum()) - (1 << 15)
        while excess != 0:
            i = int(np.argmax(freq)) if excess > 0 else int(np.argmin(freq))
            adj = -1 if excess > 0 else 1
            if freq[i] + adj < 1:
                break
            freq[i] += adj
            excess += -adj
        return np.concatenate(([0], np.cumsum(freq)))


@dataclass
class PositionEntropy:
    """Per-scan-position cross conditional entropy in bits/symbol."""

    bits: np.ndarray          # (n_positions,)
    n_symbols: np.ndarray     # (n_positions,)

    @property
    def total(self) -> float:
        return float(self.bits.sum())

    @property
    def mean(self) -> float:
        return float(self.bits.mean())


def eval_hts(
    scheme: Scheme,
    train_counts: np.ndarray,
    test_blocks: np.ndarray,
    smoothing: str = "kt",
) -> PositionEntropy:
    """H_ts per position: test joint frequencies scored by train conditionals."""
    model = ProbabilityModel(train_counts, smoothing)
    logp = model.log2_probs()
    blocks = np.asarray(test_blocks)
    ctx = scheme.context_ids(blocks)
    br = br_symbols(blocks, scheme.scan)
    n_pos = ctx.shape[1]
    bits = np.zeros(n_pos)
    n = len(blocks)
    for i in range(n_pos):
        pairs, counts = np.unique(ctx[:, i] * 4 + br[:, i], return_counts=True)
        lp = logp[pairs // 4, pairs % 4]
        if np.isneginf(lp).any():
            bad = pairs[np.isneginf(lp)]
            raise ValueError(
                f"test symbols with zero train probability at position {i}: {bad}"
            )
        bits[i] = -(counts * lp).sum() / n
    return PositionEntropy(bits, np.full(n_pos, n))


def plugin_conditional_entropy(scheme: Scheme, blocks: np.ndarray) -> PositionEntropy:
    """Empirical H(symbol | context) per position from one dataset."""
    blocks = np.asarray(blocks)
    ctx = scheme.context_ids(blocks)
    br = br_symbols(blocks, scheme.scan)
    n = len(blocks)
    n_pos = ctx.shape[1]
    bits = np.zeros(n_pos)
    for i in range(n_pos):
        pairs, counts = np.unique(ctx[:, i] * 4 + br[:, i], return_counts=True)
        joint = {}
        for p, c in zip(pairs, counts):
            joint.setdefault(p // 4, []).append(c)
        h = 0.0
        for groups in joint.values():
            groups = np.asarray(groups, dtype=float)
            tot = groups.sum()
            h -= (groups * np.log2(groups / tot)).sum()
        bits[i] = h / n
    return PositionEntropy(bits, np.full(n_pos, n))


def _entropy_contribution(vec: np.ndarray) -> float:
    """n * H for one leaf's counts, in bit-symbols."""
    tot = vec.sum()
    if tot <= 0:
        return 0.0
    nz = vec[vec > 0]
    return float(-(nz * np.log2(nz / tot)).sum())


@dataclass
class MergeOutcome:
    tree: ContextTree
    accepted_losses: list[float] = field(default_factory=list)


def merge_tree(
    tree: ContextTree,
    leaf_counts: np.ndarray,
    delta: float,
    total_symbols: float | None = None,
) -> MergeOutcome:
    """Greedy left-to-right merging of adjacent l1 leaves per occupancy node.

    Two neighboring leaves merge while the system conditional-entropy
    increase (normalized by ``total_symbols``) stays strictly below delta;
    on refusal the sweep advances one leaf.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if total_symbols is None:
        total_symbols = float(leaf_counts.sum())
    total_symbols = max(total_symbols, 1.0)

    new_intervals: dict[int, list[tuple[int, int]]] = {}
    new_counts: dict[int, list[np.ndarray]] = {}
    losses: list[float] = []
    for c2 in sorted(tree.intervals):
        spans = list(tree.intervals[c2])
        start = tree._starts[c2]
        vecs = [leaf_counts[start + i].astype(float) for i in range(len(spans))]
        i = 0
        while i + 1 < len(spans):
            merged = vecs[i] + vecs[i + 1]
            loss = (
                _entropy_contribution(merged)
                - _entropy_contribution(vecs[i])
                - _entropy_contribution(vecs[i + 1])
            ) / total_symbols
            if loss < delta:
                spans[i] = (spans[i][0], spans[i + 1][1])
                vecs[i] = merged
                del spans[i + 1], vecs[i + 1]
                losses.append(loss)
            else:
                i += 1
        new_intervals[c2] = spans
        new_counts[c2] = vecs
    out = ContextTree(tree.nc, tree.no, kind="merged", intervals=new_intervals)
    return MergeOutcome(out, losses)


def merged_scheme(
    scheme: TreeScheme, counts: np.ndarray, delta: float
) -> tuple[TreeScheme, list[float]]:
    """Merge every per-position tree against the whole-system symbol count."""
    total = float(counts.sum())
    trees = []
    losses: list[float] = []
    for i, tree in enumerate(scheme.trees):
        lo = int(scheme.offsets[i])
        out = merge_tree(tree, counts[lo:lo + tree.n_leaves], delta, total)
        trees.append(out.tree)
        losses.extend(out.accepted_losses)
    return scheme.with_trees(trees), losses


def nc_class(nc_size: int) -> int:
    """Occupancy classes for grouping: 0 empty, 2 for sizes 1-2, 3 beyond."""
    if nc_size == 0:
        return 0
    return 2 if nc_size <= 2 else 3


def build_cts(
    d: PartitionedDictionary,
    blocks: np.ndarray,
    n_nbd: int,
    th_c: float,
    delta: float,
    min_support: int = 500,
) -> SimplifiedScheme:
    """Grouped scheme over (frequency band, occupancy class) with stored
    correlated-offset templates and one merged tree per group."""
    scan = zigzag(d.width, d.height)
    parts = [split_neighborhood(d, pos, n_nbd, th_c) for pos in scan]

    def most_common(size: int) -> tuple:
        from collections import Counter
        tally = Counter(
            tuple(sorted(p.nc)) for p in parts if len(p.nc) == size
        )
        if tally:
            return tally.most_common(1)[0][0]
        # No position carries exactly this many offsets: take the most
        # frequent offsets overall.
        offs = Counter(off for p in parts for off in p.nc)
        return tuple(sorted(off for off, _ in offs.most_common(size)))

    templates = {0: (), 2: most_common(2), 3: most_common(3)}

    group_of_position = []
    for pos, part in zip(scan, parts):
        band = region_class(pos[0], pos[1], d.width, d.height)
        group_of_position.append(band * 10 + nc_class(len(part.nc)))

    # Coalesce starving groups into the nearest band with the same template.
    n_blocks = len(blocks)
    from collections import Counter
    sizes = Counter(group_of_position)
    remap = {}
    for gid, npos in sorted(sizes.items()):
        if npos * n_blocks >= min_support:
            continue
        klass = gid % 10
        candidates = [
            g for g in sizes
            if g % 10 == klass and g != gid and sizes[g] * n_blocks >= min_support
        ]
        if candidates:
            remap[gid] = min(candidates, key=lambda g: (abs(g // 10 - gid // 10), g))
    group_of_position = [remap.get(g, g) for g in group_of_position]

    group_trees = {}
    template_of_group = {}
    for gid in sorted(set(group_of_position)):
        klass = gid % 10
        nc = templates[klass]
        no_union = tuple(
            (du, dv)
            for dv in range(n_nbd + 1)
            for du in range(n_nbd + 1 - dv)
            if 0 < du + dv <= n_nbd and (du, dv) not in set(nc)
        )
        group_trees[gid] = ContextTree(tuple(nc), no_union)
        template_of_group[gid] = klass

    scheme = SimplifiedScheme(
        d, n_nbd, th_c, group_of_position, group_trees, templates, template_of_group
    )
    counts = train(scheme, blocks)
    total = float(counts.sum())
    merged = {}
    for gid, tree in scheme.group_trees.items():
        lo = scheme.offsets[gid]
        merged[gid] = merge_tree(tree, counts[lo:lo + tree.n_leaves], delta, total).tree
    return SimplifiedScheme(
        d, n_nbd, th_c, group_of_position, merged, templates, template_of_group
    )


@dataclass
class SweepResult:
    table: dict[tuple[int, float], float]
    best: tuple[int, float]


def sweep(
    d: PartitionedDictionary,
    train_blocks: np.ndarray,
    test_blocks: np.ndarray,
    n_nbd_grid=SWEEP_N_NBD,
    th_c_grid=SWEEP_TH_C,
    smoothing: str = "kt",
) -> SweepResult:
    """Grid evaluation of the condition-tree parameters.

    Deterministic: the winner minimizes total H_ts, ties broken toward the
    smaller neighborhood size, then the smaller correlation threshold.
    """
    table = {}
    for n_nbd in n_nbd_grid:
        for th_c in th_c_grid:
            scheme = TreeScheme(d, n_nbd, th_c)
            counts = train(scheme, train_blocks)
            table[(n_nbd, th_c)] = eval_hts(scheme, counts, test_blocks, smoothing).total
    best = min(table, key=lambda k: (round(table[k], 12), k[0], k[1]))
    return SweepResult(table, best)

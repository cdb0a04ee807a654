"""Deterministic residual corpora: synthetic correlated fields and
block-matched frame differences, restricted to NR supports."""

from __future__ import annotations

import numpy as np


def _ar1_filter(white: np.ndarray, rho: float, axis: int) -> np.ndarray:
    """First-order recursive filter with unit marginal variance."""
    out = np.moveaxis(white.copy(), axis, -1)
    scale = np.sqrt(1.0 - rho * rho)
    for j in range(1, out.shape[-1]):
        out[..., j] = rho * out[..., j - 1] + scale * out[..., j]
    return np.moveaxis(out, -1, axis)


def gen_synthetic(
    mask: np.ndarray, count: int, rho: float, sigma: float, seed: int
) -> np.ndarray:
    """Separable AR(1) Gaussian fields on the bounding box, int16, zeroed
    outside the support.  Block i depends only on (seed, i)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    white = np.empty((count, h, w))
    for i in range(count):
        white[i] = np.random.default_rng([seed, i]).standard_normal((h, w))
    fields = _ar1_filter(_ar1_filter(white, rho, axis=1), rho, axis=2) * sigma
    blocks = np.clip(np.rint(fields), -32768, 32767).astype(np.int16)
    blocks[:, ~mask] = 0
    return blocks


def block_match(
    cur: np.ndarray, ref: np.ndarray, y0: int, x0: int, bh: int, bw: int, radius: int
) -> tuple[int, int]:
    """Full-search SAD matching; first minimum in row-major (dy, dx) order."""
    h, w = ref.shape
    tile = cur[y0:y0 + bh, x0:x0 + bw].astype(np.int64)
    best = None
    best_mv = (0, 0)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            y, x = y0 + dy, x0 + dx
            if y < 0 or x < 0 or y + bh > h or x + bw > w:
                continue
            sad = int(np.abs(tile - ref[y:y + bh, x:x + bw]).sum())
            if best is None or sad < best:
                best = sad
                best_mv = (dy, dx)
    return best_mv


def gen_from_frames(
    cur: np.ndarray,
    ref: np.ndarray,
    mask: np.ndarray,
    radius: int = 8,
    max_blocks: int | None = None,
) -> np.ndarray:
    """Motion-compensated residual blocks tiled over a frame pair, int16,
    restricted to the shape support."""
    cur = np.asarray(cur)
    ref = np.asarray(ref)
    if cur.shape != ref.shape:
        raise ValueError("frames differ in size")
    mask = np.asarray(mask, dtype=bool)
    bh, bw = mask.shape
    out = []
    for y0 in range(0, cur.shape[0] - bh + 1, bh):
        for x0 in range(0, cur.shape[1] - bw + 1, bw):
            dy, dx = block_match(cur, ref, y0, x0, bh, bw, radius)
            pred = ref[y0 + dy:y0 + dy + bh, x0 + dx:x0 + dx + bw].astype(np.int64)
            res = cur[y0:y0 + bh, x0:x0 + bw].astype(np.int64) - pred
            res[~mask] = 0
            out.append(res.astype(np.int16))
            if max_blocks is not None and len(out) >= max_blocks:
                return np.stack(out)
    if not out:
        raise ValueError("frame smaller than one block")
    return np.stack(out)


def split_indices(n: int, seed: int, ratio: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, then an 8:2 cut (train first)."""
    if n < 5:
        raise ValueError("need at least 5 blocks to split")
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(ratio * n))
    return np.sort(perm[:k]), np.sort(perm[k:])

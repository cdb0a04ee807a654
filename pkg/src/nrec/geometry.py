"""Non-rectangular (NR) region geometry for AV1-style wedge partitions.

Wedge masks are generated from the AV1 wedge codebooks (direction plus
anchor offsets in eighths of the block dimension) by binarizing the
64-level master blending mask at threshold 32.  The resulting NR regions
are cropped to power-of-two bounding boxes, 1:4 regions are subdivided
where possible, and the survivors are deduplicated under the dihedral
group into the canonical shape inventory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

MASK_MASTER_SIZE = 64
WEDGE_TYPES = 16

# Wedge block sizes: all (width, height) pairs from {8, 16, 32}.
WEDGE_BLOCK_SIZES: tuple[tuple[int, int], ...] = (
    (8, 8), (8, 16), (8, 32),
    (16, 8), (16, 16), (16, 32),
    (32, 8), (32, 16), (32, 32),
)

# Wedge directions.
WEDGE_HORIZONTAL = 0
WEDGE_VERTICAL = 1
WEDGE_OBLIQUE27 = 2
WEDGE_OBLIQUE63 = 3
WEDGE_OBLIQUE117 = 4
WEDGE_OBLIQUE153 = 5

_WEDGE_MASTER_OBLIQUE_ODD = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 6, 18,
    37, 53, 60, 63, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
    64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
]
_WEDGE_MASTER_OBLIQUE_EVEN = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 4, 11, 27,
    46, 58, 62, 63, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
    64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
]
_WEDGE_MASTER_VERTICAL = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 7, 21,
    43, 57, 62, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
    64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64, 64,
]

# Codebooks: (direction, x offset, y offset), offsets in eighths.
_CODEBOOK_TALL = (
    (WEDGE_OBLIQUE27, 4, 4), (WEDGE_OBLIQUE63, 4, 4),
    (WEDGE_OBLIQUE117, 4, 4), (WEDGE_OBLIQUE153, 4, 4),
    (WEDGE_HORIZONTAL, 4, 2), (WEDGE_HORIZONTAL, 4, 4),
    (WEDGE_HORIZONTAL, 4, 6), (WEDGE_VERTICAL, 4, 4),
    (WEDGE_OBLIQUE27, 4, 2), (WEDGE_OBLIQUE27, 4, 6),
    (WEDGE_OBLIQUE153, 4, 2), (WEDGE_OBLIQUE153, 4, 6),
    (WEDGE_OBLIQUE63, 2, 4), (WEDGE_OBLIQUE63, 6, 4),
    (WEDGE_OBLIQUE117, 2, 4), (WEDGE_OBLIQUE117, 6, 4),
)
_CODEBOOK_WIDE = (
    (WEDGE_OBLIQUE27, 4, 4), (WEDGE_OBLIQUE63, 4, 4),
    (WEDGE_OBLIQUE117, 4, 4), (WEDGE_OBLIQUE153, 4, 4),
    (WEDGE_VERTICAL, 2, 4), (WEDGE_VERTICAL, 4, 4),
    (WEDGE_VERTICAL, 6, 4), (WEDGE_HORIZONTAL, 4, 4),
    (WEDGE_OBLIQUE27, 4, 2), (WEDGE_OBLIQUE27, 4, 6),
    (WEDGE_OBLIQUE153, 4, 2), (WEDGE_OBLIQUE153, 4, 6),
    (WEDGE_OBLIQUE63, 2, 4), (WEDGE_OBLIQUE63, 6, 4),
    (WEDGE_OBLIQUE117, 2, 4), (WEDGE_OBLIQUE117, 6, 4),
)
_CODEBOOK_SQUARE = (
    (WEDGE_OBLIQUE27, 4, 4), (WEDGE_OBLIQUE63, 4, 4),
    (WEDGE_OBLIQUE117, 4, 4), (WEDGE_OBLIQUE153, 4, 4),
    (WEDGE_HORIZONTAL, 4, 2), (WEDGE_HORIZONTAL, 4, 6),
    (WEDGE_VERTICAL, 2, 4), (WEDGE_VERTICAL, 6, 4),
    (WEDGE_OBLIQUE27, 4, 2), (WEDGE_OBLIQUE27, 4, 6),
    (WEDGE_OBLIQUE153, 4, 2), (WEDGE_OBLIQUE153, 4, 6),
    (WEDGE_OBLIQUE63, 2, 4), (WEDGE_OBLIQUE63, 6, 4),
    (WEDGE_OBLIQUE117, 2, 4), (WEDGE_OBLIQUE117, 6, 4),
)


class ShapeType(IntEnum):
    """Shape families by area ratio and boundary character."""

    TYPE1 = 1   # r_a near 1/4
    TYPE2 = 2   # r_a near 1/2, diagonal boundary
    TYPE3 = 3   # r_a near 1/2, close to a rectangle
    TYPE4 = 4   # r_a near 3/4, diagonal boundary
    TYPE5 = 5   # r_a near 3/4, close to a rectangle


@dataclass(frozen=True)
class WedgeSpec:
    """One of the two regions of a wedge split: block size, codebook index, region."""

    width: int
    height: int
    wedge_index: int
    region: int

    def __post_init__(self):
        if (self.width, self.height) not in WEDGE_BLOCK_SIZES:
            raise ValueError(f"unsupported block size {self.width}x{self.height}")
        if not 0 <= self.wedge_index < WEDGE_TYPES:
            raise ValueError(f"wedge index {self.wedge_index} out of range")
        if self.region not in (0, 1):
            raise ValueError(f"region must be 0 or 1, got {self.region}")


@dataclass(frozen=True)
class WedgeRegion:
    spec: WedgeSpec
    mask: np.ndarray          # bool [h, w] on the source block grid
    rectangular: bool


@dataclass(frozen=True)
class CanonicalShape:
    """A deduplicated NR support inside a tight power-of-two bounding box."""

    shape_id: int
    mask: np.ndarray          # bool [H, W], support touching top and left edges
    r_a: float
    shape_class: ShapeType
    transform_chain: tuple[str, ...]   # provenance of the first source region

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def area(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class RegionMapping:
    """How one wedge region maps onto its canonical shape.

    Applying ``transform_chain`` to the canonical mask and pasting the result
    at ``origin`` (x0, y0) in the source block reproduces the region support,
    or its NR remainder when ``rect_part`` records a split-off rectangle.
    """

    shape_id: int
    transform_chain: tuple[str, ...]
    origin: tuple[int, int]
    rect_part: Optional[tuple[int, int, int, int]] = None   # (x0, y0, w, h)


def _build_master_masks() -> np.ndarray:
    n = MASK_MASTER_SIZE
    masters = np.zeros((6, n, n), dtype=np.int32)
    even = np.asarray(_WEDGE_MASTER_OBLIQUE_EVEN, dtype=np.int32)
    odd = np.asarray(_WEDGE_MASTER_OBLIQUE_ODD, dtype=np.int32)
    vert = np.asarray(_WEDGE_MASTER_VERTICAL, dtype=np.int32)

    cols = np.arange(n)
    m63 = np.zeros((n, n), dtype=np.int32)
    for i in range(0, n, 2):
        shift = n // 4 - i // 2
        m63[i] = even[np.clip(cols - shift, 0, n - 1)]
        m63[i + 1] = odd[np.clip(cols - (shift - 1), 0, n - 1)]

    masters[WEDGE_OBLIQUE63] = m63
    masters[WEDGE_OBLIQUE27] = m63.T
    masters[WEDGE_OBLIQUE117] = 64 - m63[:, ::-1]
    masters[WEDGE_OBLIQUE153] = (64 - m63.T)[::-1, :]
    masters[WEDGE_VERTICAL] = np.broadcast_to(vert, (n, n))
    masters[WEDGE_HORIZONTAL] = masters[WEDGE_VERTICAL].T
    return masters


_MASTERS = _build_master_masks()


def _codebook(width: int, height: int):
    if height > width:
        return _CODEBOOK_TALL
    if height < width:
        return _CODEBOOK_WIDE
    return _CODEBOOK_SQUARE


def _blended_mask(width: int, height: int, wedge_index: int) -> tuple[np.ndarray, bool]:
    """64-level blend for one wedge, plus the AV1 sign-flip flag."""
    direction, xq, yq = _codebook(width, height)[wedge_index]
    xoff = MASK_MASTER_SIZE // 2 - ((xq * width) >> 3)
    yoff = MASK_MASTER_SIZE // 2 - ((yq * height) >> 3)
    master = _MASTERS[direction]
    block = master[yoff:yoff + height, xoff:xoff + width]
    # Sign flip: the boundary-sample average decides which region is index 0.
    s = int(block[0, :].sum()) + int(block[1:, 0].sum())
    avg = (s + (width + height - 1) // 2) // (width + height - 1)
    return block, avg < 32


def wedge_mask(spec: WedgeSpec) -> np.ndarray:
    """Binary support of one wedge region, bool array of shape [h, w]."""
    block, flip = _blended_mask(spec.width, spec.height, spec.wedge_index)
    blend = block if spec.region == int(flip) else 64 - block
    # No master table entry equals 32, so >= 32 yields exact complements.
    return blend >= 32


def is_rectangular(mask: np.ndarray) -> bool:
    """True when the support is exactly an axis-aligned rectangle."""
    if not mask.any():
        return False
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    h = rows[-1] - rows[0] + 1
    w = cols[-1] - cols[0] + 1
    return int(mask.sum()) == h * w


def enumerate_regions() -> list[WedgeRegion]:
    """All wedge regions over the 9 block sizes: 16 wedges x 2 regions each."""
    out = []
    for width, height in WEDGE_BLOCK_SIZES:
        for k in range(WEDGE_TYPES):
            for region in (0, 1):
                spec = WedgeSpec(width, height, k, region)
                mask = wedge_mask(spec)
                out.append(WedgeRegion(spec, mask, is_rectangular(mask)))
    return out


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def tight_crop(mask: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Crop to the support's tight box; returns (cropped, (x0, y0))."""
    if not mask.any():
        raise ValueError("empty mask")
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    y0, y1 = int(rows[0]), int(rows[-1]) + 1
    x0, x1 = int(cols[0]), int(cols[-1]) + 1
    return mask[y0:y1, x0:x1], (x0, y0)


def bounding_box(mask: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Tight crop padded on the right/bottom to power-of-two dimensions.

    Returns the padded mask and the crop origin (x0, y0) in the input grid.
    """
    cropped, origin = tight_crop(mask)
    h, w = cropped.shape
    ph, pw = _next_pow2(h), _next_pow2(w)
    if (ph, pw) == (h, w):
        return cropped.copy(), origin
    padded = np.zeros((ph, pw), dtype=bool)
    padded[:h, :w] = cropped
    return padded, origin


def _largest_pow2_at_most(n: int) -> int:
    p = 1
    while p * 2 <= n:
        p *= 2
    return p


def subdivide(mask: np.ndarray) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Split a 1:4-block region into a rectangular run and an NR remainder.

    A wedge region on a 1:4 block is a run of full-width rows capped by an
    oblique staircase.  When the support is longer than half the block, the
    largest power-of-two run of full rows at the rectangular end is split
    off, provided it is at least a quarter block (no sliver rectangles) and
    the remainder, which carries the whole oblique boundary, fits inside a
    half-length window.  Returns (rectangular part, NR part) as masks on
    the source grid, or None when no such split exists.
    """
    h, w = mask.shape
    if not (h == 4 * w or w == 4 * h):
        return None
    transposed = w > h
    m = mask.T if transposed else mask
    half = m.shape[0] // 2

    t, (x0, y0) = tight_crop(m)
    tl, tw = t.shape
    if tl <= half:
        return None
    full = t.all(axis=1)
    k_top = int(np.argmin(full)) if not full.all() else tl
    k_bot = int(np.argmin(full[::-1])) if not full.all() else tl
    k, from_top = (k_top, True) if k_top >= k_bot else (k_bot, False)
    if k == 0:
        return None
    r = _largest_pow2_at_most(k)
    if r < m.shape[0] // 4 or tl - r > half:
        return None

    rect = np.zeros_like(m)
    rows = np.s_[y0:y0 + r] if from_top else np.s_[y0 + tl - r:y0 + tl]
    rect[rows, x0:x0 + tw] = True
    nr = m & ~rect
    if transposed:
        rect, nr = rect.T, nr.T
    return np.ascontiguousarray(rect), np.ascontiguousarray(nr)


# The eight dihedral transforms, expressed as chains of primitive ops.
_PRIMITIVES = {
    "rotate90": lambda m: np.rot90(m, 1),     # counterclockwise
    "mirrorH": lambda m: m[:, ::-1],
    "mirrorV": lambda m: m[::-1, :],
    "transpose": lambda m: m.T,
}

_D4_CHAINS: tuple[tuple[str, ...], ...] = (
    (),
    ("rotate90",),
    ("rotate90", "rotate90"),
    ("rotate90", "rotate90", "rotate90"),
    ("mirrorH",),
    ("mirrorV",),
    ("transpose",),
    ("transpose", "rotate90", "rotate90"),
)


def apply_chain(mask: np.ndarray, chain: tuple[str, ...]) -> np.ndarray:
    out = mask
    for op in chain:
        if op == "subdivide-remainder":
            continue   # bookkeeping marker, see RegionMapping
        out = _PRIMITIVES[op](out)
    return np.ascontiguousarray(out)


def _invert_chain(chain: tuple[str, ...]) -> tuple[str, ...]:
    inv = []
    for op in reversed(chain):
        if op == "rotate90":
            inv.extend(["rotate90", "rotate90", "rotate90"])
        else:
            inv.append(op)
    return tuple(inv)


def _canonical_key(support: np.ndarray) -> tuple[tuple[int, int], bytes]:
    """Smallest (shape, bytes) representation over the dihedral orbit."""
    best = None
    for chain in _D4_CHAINS:
        t = apply_chain(support, chain)
        t, _ = tight_crop(t)
        key = (t.shape, np.ascontiguousarray(t).tobytes())
        if best is None or key < best[0]:
            best = (key, chain)
    return best[0]


def _orientation_chain(support: np.ndarray, canonical: np.ndarray) -> tuple[str, ...]:
    """Chain mapping the canonical tight support back onto the source support."""
    for chain in _D4_CHAINS:
        t = apply_chain(support, chain)
        t, _ = tight_crop(t)
        if t.shape == canonical.shape and np.array_equal(t, canonical):
            return _invert_chain(chain)
    raise AssertionError("support not in the orbit of its canonical mask")


def oblique_span(mask: np.ndarray) -> float:
    """Fraction of the tight support crossed by the oblique boundary.

    Rows and columns of the tight support are either fully covered or cut
    by the boundary staircase; the smaller of the two partial fractions
    measures whether the boundary runs corner-to-corner (near 1 for
    diagonal shapes) or straight across (small for near-rectangular ones).
    Invariant under the dihedral group, unlike padded-mask comparisons.
    """
    sup, _ = tight_crop(mask)
    h, w = sup.shape
    rows_partial = int((~sup.all(axis=1)).sum()) / h
    cols_partial = int((~sup.all(axis=0)).sum()) / w
    return min(rows_partial, cols_partial)


def diagonal_symmetric(mask: np.ndarray, threshold: float = 0.70) -> bool:
    """True when the boundary runs corner-to-corner rather than edge-to-edge."""
    return oblique_span(mask) >= threshold


def classify(mask: np.ndarray) -> ShapeType:
    """Assign a shape family from the box-fill ratio and boundary character.

    Area-ratio band edges sit in the gaps between the ratios the wedge
    masks actually produce (0.26..0.28 and 0.375 | 0.47..0.53 |
    0.625..0.75).  Within the mid band the boundary spans nearly the whole
    support for triangles (>= 0.75) but a minor fraction for trapezoid
    cuts (<= 0.667); within the high band the corner-bite family spans
    >= 0.5 versus <= 0.29 for straight cuts, so the thresholds sit in
    those gaps.
    """
    h, w = mask.shape
    r_a = float(mask.sum()) / (w * h)
    if 0.15 <= r_a < 0.42:
        return ShapeType.TYPE1
    if 0.42 <= r_a < 0.58:
        return ShapeType.TYPE2 if diagonal_symmetric(mask, 0.70) else ShapeType.TYPE3
    if 0.58 <= r_a < 0.90:
        return ShapeType.TYPE4 if diagonal_symmetric(mask, 0.40) else ShapeType.TYPE5
    raise ValueError(f"area ratio {r_a:.3f} outside all shape bands")


@dataclass
class ShapeInventory:
    """Canonical shapes plus the per-region mapping onto them."""

    shapes: list[CanonicalShape]
    mapping: dict[WedgeSpec, RegionMapping]
    regions: list[WedgeRegion] = field(repr=False, default_factory=list)

    def by_id(self, shape_id: int) -> CanonicalShape:
        return self.shapes[shape_id]

    def occurrence_table(self) -> dict[tuple[int, int, ShapeType], int]:
        """Counts per (min dim, max dim, type) over all mapped NR regions."""
        table: dict[tuple[int, int, ShapeType], int] = {}
        for m in self.mapping.values():
            s = self.shapes[m.shape_id]
            key = (min(s.width, s.height), max(s.width, s.height), s.shape_class)
            table[key] = table.get(key, 0) + 1
        return table


def canonicalize(regions: Optional[list[WedgeRegion]] = None) -> ShapeInventory:
    """Deduplicate all NR wedge regions into the canonical shape inventory."""
    if regions is None:
        regions = enumerate_regions()

    groups: dict[tuple, list] = {}
    for reg in regions:
        if reg.rectangular:
            continue
        mask = reg.mask
        split = subdivide(mask)
        rect_part = None
        nr_mask = mask
        if split is not None:
            rect_mask, nr_mask = split
            rcrop, (rx, ry) = tight_crop(rect_mask)
            rect_part = (rx, ry, rcrop.shape[1], rcrop.shape[0])
        support, origin = tight_crop(nr_mask)
        key = _canonical_key(support)
        groups.setdefault(key, []).append((reg, support, origin, rect_part))

    order = sorted(
        groups,
        key=lambda k: (k[0][0] * k[0][1], k[0][0], k[0][1], k[1]),
    )
    shapes: list[CanonicalShape] = []
    mapping: dict[WedgeSpec, RegionMapping] = {}
    for shape_id, key in enumerate(order):
        members = groups[key]
        # The representative keeps the orientation of the first enumerated
        # member; partitioned-DCT correlation patterns are not invariant
        # under the dihedral group, so the choice is part of the contract.
        rep = members[0][1]
        bh, bw = _next_pow2(rep.shape[0]), _next_pow2(rep.shape[1])
        padded = np.zeros((bh, bw), dtype=bool)
        padded[:rep.shape[0], :rep.shape[1]] = rep
        first_chain: Optional[tuple[str, ...]] = None
        for reg, support, origin, rect_part in members:
            chain = _orientation_chain(support, rep)
            if rect_part is not None:
                chain = ("subdivide-remainder",) + chain
            if first_chain is None:
                first_chain = chain
            mapping[reg.spec] = RegionMapping(shape_id, chain, origin, rect_part)
        shapes.append(CanonicalShape(
            shape_id=shape_id,
            mask=padded,
            r_a=float(padded.sum()) / (bw * bh),
            shape_class=classify(padded),
            transform_chain=first_chain or (),
        ))
    return ShapeInventory(shapes=shapes, mapping=mapping, regions=regions)


def reconstruct_region(inv: ShapeInventory, spec: WedgeSpec) -> np.ndarray:
    """Rebuild a region's support from its canonical shape and mapping."""
    m = inv.mapping[spec]
    shape = inv.by_id(m.shape_id)
    support, _ = tight_crop(shape.mask)
    placed = apply_chain(support, m.transform_chain)
    out = np.zeros((spec.height, spec.width), dtype=bool)
    x0, y0 = m.origin
    h, w = placed.shape
    out[y0:y0 + h, x0:x0 + w] = placed
    if m.rect_part is not None:
        rx, ry, rw, rh = m.rect_part
        out[ry:ry + rh, rx:rx + rw] = True
    return out

"""Partitioned DCT dictionaries over non-rectangular supports.

Atoms are the restrictions of an orthonormal 2D DCT-II basis (the basis
of the shape's power-of-two bounding box) to the support, unit-normalized.
The atom count equals the bounding-box area, so the dictionary is
overcomplete on the support and neighboring atoms correlate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .geometry import CanonicalShape

DEGENERATE_EPS = 1e-12

Offset = tuple[int, int]   # (du, dv) = (column, row) step


@lru_cache(maxsize=None)
def dct_basis_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows indexed by frequency."""
    x = np.arange(n)
    u = np.arange(n)[:, None]
    c = np.cos(np.pi * (2 * x + 1) * u / (2 * n)) * np.sqrt(2.0 / n)
    c[0] /= np.sqrt(2.0)
    return c


def dct_basis_images(width: int, height: int) -> np.ndarray:
    """Flattened 2D basis images: row v*width+u is basis (u, v), row-major."""
    return np.kron(dct_basis_matrix(height), dct_basis_matrix(width))


@dataclass(frozen=True)
class NeighborhoodPartition:
    """Causal bottom-right neighborhood split by atom correlation."""

    position: Offset
    n_nbd: int
    th_c: float
    nc: tuple[Offset, ...]   # correlated offsets, |corr| >= th_c
    no: tuple[Offset, ...]   # the orthogonal remainder

    @property
    def nt(self) -> tuple[Offset, ...]:
        return tuple(sorted(set(self.nc) | set(self.no)))


class PartitionedDictionary:
    """Unit-normalized DCT restrictions for one canonical shape."""

    def __init__(self, mask: np.ndarray, shape: Union[CanonicalShape, None] = None):
        mask = np.asarray(mask, dtype=bool)
        h, w = mask.shape
        if h & (h - 1) or w & (w - 1):
            raise ValueError("bounding box dimensions must be powers of two")
        self.shape = shape
        self.mask = mask
        self.width = w
        self.height = h
        self.support_idx = np.flatnonzero(mask.ravel())
        self.area = len(self.support_idx)

        basis = dct_basis_images(w, h)
        restricted = basis[:, self.support_idx]
        norms = np.linalg.norm(restricted, axis=1)
        self.restriction_norms = norms
        self.degenerate = norms < DEGENERATE_EPS
        safe = np.where(self.degenerate, 1.0, norms)
        self.atoms = restricted / safe[:, None]
        self.atoms[self.degenerate] = 0.0
        self._gram = None

    @property
    def n_atoms(self) -> int:
        return self.width * self.height

    def atom_index(self, u: int, v: int) -> int:
        if not (0 <= u < self.width and 0 <= v < self.height):
            raise IndexError(f"position ({u},{v}) outside {self.width}x{self.height}")
        return v * self.width + u

    def atom(self, u: int, v: int) -> np.ndarray:
        return self.atoms[self.atom_index(u, v)]

    def gram(self) -> np.ndarray:
        """Signed Gram matrix of the normalized atoms (cached)."""
        if self._gram is None:
            self._gram = self.atoms @ self.atoms.T
        return self._gram

    def correlation(self, a: Offset, b: Offset) -> float:
        g = self.gram()
        return abs(float(g[self.atom_index(*a), self.atom_index(*b)]))


def build_dictionary(shape: Union[CanonicalShape, np.ndarray]) -> PartitionedDictionary:
    if isinstance(shape, CanonicalShape):
        return PartitionedDictionary(shape.mask, shape)
    return PartitionedDictionary(np.asarray(shape, dtype=bool))


def correlation_map(d: PartitionedDictionary, position: Offset, radius: int) -> np.ndarray:
    """|correlation| against the atom at ``position`` for every offset in a
    (2*radius+1)^2 window; offsets leaving the box are NaN."""
    u0, v0 = position
    center = d.atom_index(u0, v0)
    g = d.gram()
    out = np.full((2 * radius + 1, 2 * radius + 1), np.nan)
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            u, v = u0 + du, v0 + dv
            if 0 <= u < d.width and 0 <= v < d.height:
                out[dv + radius, du + radius] = abs(g[center, v * d.width + u])
    return out


def causal_neighborhood(d: PartitionedDictionary, position: Offset, n_nbd: int) -> list[Offset]:
    """Bottom-right offsets within l1 distance n_nbd that stay in the box."""
    u0, v0 = position
    out = []
    for dv in range(0, n_nbd + 1):
        for du in range(0, n_nbd + 1 - dv):
            if du + dv == 0 or du + dv > n_nbd:
                continue
            if u0 + du < d.width and v0 + dv < d.height:
                out.append((du, dv))
    return out


def split_neighborhood(
    d: PartitionedDictionary, position: Offset, n_nbd: int, th_c: float
) -> NeighborhoodPartition:
    """Partition the causal neighborhood into correlated and orthogonal sets."""
    if n_nbd < 1:
        raise ValueError("n_nbd must be >= 1")
    if not 0.0 < th_c <= 1.0:
        raise ValueError("th_c must be in (0, 1]")
    u0, v0 = position
    nc, no = [], []
    for du, dv in causal_neighborhood(d, position, n_nbd):
        corr = d.correlation((u0, v0), (u0 + du, v0 + dv))
        (nc if corr >= th_c else no).append((du, dv))
    return NeighborhoodPartition(position, n_nbd, th_c, tuple(nc), tuple(no))

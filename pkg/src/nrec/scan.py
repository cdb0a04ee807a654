"""Zig-zag scan and the four-symbol decomposition of quantized levels."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

MAX_LEVEL = (1 << 15) + 14


@lru_cache(maxsize=None)
def zigzag(width: int, height: int) -> tuple[tuple[int, int], ...]:
    """Anti-diagonal scan as (u, v) positions, DC first.

    Odd diagonals are walked from high u to low u, so the scan leaves DC
    toward the horizontal neighbor first, matching the 2x2 order
    (0,0),(1,0),(0,1),(1,1).
    """
    if width < 1 or height < 1:
        raise ValueError("scan needs positive dimensions")
    order = []
    for d in range(width + height - 1):
        lo = max(0, d - height + 1)
        hi = min(d, width - 1)
        us = range(hi, lo - 1, -1) if d % 2 else range(lo, hi + 1)
        order.extend((u, d - u) for u in us)
    return tuple(order)


def coding_order(width: int, height: int) -> tuple[tuple[int, int], ...]:
    """Reverse scan: bottom-right coefficients first, so the bottom-right
    neighborhood of a position is already decoded when it is coded."""
    return tuple(reversed(zigzag(width, height)))


@dataclass(frozen=True)
class SymbolDecomposition:
    br: int                     # base range: 0, 1, 2, or 3 meaning ">2"
    lr: tuple[int, ...]         # low range symbols, each 0..3, at most 4
    hr: int                     # high range remainder
    sign: Optional[int]         # +1 / -1, None for zero


def decompose(level: int) -> SymbolDecomposition:
    a = abs(level)
    if a > MAX_LEVEL:
        raise ValueError(f"|level| {a} exceeds {MAX_LEVEL}")
    br = min(a, 3)
    lr: tuple[int, ...] = ()
    hr = 0
    if a >= 3:
        rem = a - 3
        for _ in range(4):
            s = min(rem, 3)
            lr += (s,)
            rem -= s
            if s < 3:
                break
        hr = rem
    sign = None if level == 0 else (1 if level > 0 else -1)
    return SymbolDecomposition(br, lr, hr, sign)


def recompose(sym: SymbolDecomposition) -> int:
    a = sym.br + sum(sym.lr) + sym.hr
    if sym.sign is None:
        return 0
    return sym.sign * a

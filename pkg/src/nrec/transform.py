"""Sparse coding of NR signals and the scaling path to TX coefficients.

OMP runs against the partitioned dictionary; dividing each coefficient by
its atom's restriction norm places it on the bounding-box grid so that a
regular inverse DCT, restricted to the support, reproduces the sparse
approximation.  The decoder side therefore stays a stock rectangular
inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg

from .dictionary import PartitionedDictionary

COND_LIMIT = 1e8


@dataclass
class SparseCode:
    selected: list[tuple[int, int]]
    coefficients: np.ndarray
    residual_norm: float
    ill_conditioned: bool = False
    residual_history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class QuantParams:
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("quantizer step must be positive")


def omp(
    d: PartitionedDictionary,
    signal: np.ndarray,
    eps_res: float = 1e-3,
    k_max: int | None = None,
) -> SparseCode:
    """Greedy sparse approximation with per-step least-squares re-solve.

    Selection maximizes |<atom, residual>|; the coefficients are re-solved
    each iteration through a progressively extended Cholesky factor of the
    selected sub-Gram.  Stops at eps_res * ||signal||, at k_max atoms, or
    when the selected set's estimated condition number passes 1e8.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.shape != (d.area,):
        raise ValueError(f"signal length {signal.shape} != support area {d.area}")
    if eps_res < 0:
        raise ValueError("eps_res must be >= 0")
    if k_max is None:
        k_max = max(1, d.area // 4)
    if not 1 <= k_max <= d.n_atoms:
        raise ValueError("k_max out of range")

    norm0 = float(np.linalg.norm(signal))
    if norm0 == 0.0:
        return SparseCode([], np.zeros(0), 0.0)
    target = eps_res * norm0

    usable = ~d.degenerate
    residual = signal.copy()
    res_norm = norm0
    history = [res_norm]

    selected: list[int] = []
    chol = np.zeros((k_max, k_max))
    proj = np.zeros(k_max)            # A_S^T signal
    coeffs = np.zeros(0)
    ill = False

    while len(selected) < k_max and res_norm > target:
        scores = np.abs(d.atoms @ residual)
        scores[~usable] = -1.0
        if selected:
            scores[selected] = -1.0
        best = int(np.argmax(scores))
        if scores[best] <= 1e-14 * norm0:
            break

        k = len(selected)
        if k == 0:
            chol[0, 0] = 1.0
        else:
            cross = d.atoms[selected] @ d.atoms[best]
            w = scipy.linalg.solve_triangular(chol[:k, :k], cross, lower=True)
            d2 = 1.0 - float(w @ w)
            if d2 <= 1e-14:
                ill = True
                break
            diag = np.diag(chol[:k, :k])
            new_diag = np.sqrt(d2)
            cond_est = (max(diag.max(), new_diag) / min(diag.min(), new_diag)) ** 2
            if cond_est > COND_LIMIT:
                ill = True
                break
            chol[k, :k] = w
            chol[k, k] = new_diag

        selected.append(best)
        k += 1
        proj[k - 1] = float(d.atoms[best] @ signal)
        y = scipy.linalg.solve_triangular(chol[:k, :k], proj[:k], lower=True)
        coeffs = scipy.linalg.solve_triangular(chol[:k, :k].T, y, lower=False)
        residual = signal - coeffs @ d.atoms[selected]
        new_norm = float(np.linalg.norm(residual))
        assert new_norm <= res_norm + 1e-9 * norm0, "residual increased"
        res_norm = new_norm
        history.append(res_norm)

    positions = [(i % d.width, i // d.width) for i in selected]
    return SparseCode(positions, np.asarray(coeffs, dtype=float), res_norm, ill, history)


def approximation(code: SparseCode, d: PartitionedDictionary) -> np.ndarray:
    """The sparse approximation as a signal over the support."""
    out = np.zeros(d.area)
    for (u, v), c in zip(code.selected, code.coefficients):
        out += c * d.atoms[d.atom_index(u, v)]
    return out


def coefficient_grid(code: SparseCode, d: PartitionedDictionary) -> np.ndarray:
    """Unquantized TX coefficients: c / s at each selected slot, 0 elsewhere."""
    grid = np.zeros((d.height, d.width))
    for (u, v), c in zip(code.selected, code.coefficients):
        s = d.restriction_norms[d.atom_index(u, v)]
        if s < 1e-12:
            raise ValueError(f"selected atom ({u},{v}) is degenerate")
        grid[v, u] = c / s
    return grid


def quantize(grid: np.ndarray, q: QuantParams) -> np.ndarray:
    """Uniform quantizer, round half away from zero, no dead zone."""
    scaled = grid / q.step
    return (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int32)


def to_coefficient_block(
    code: SparseCode, d: PartitionedDictionary, q: QuantParams
) -> np.ndarray:
    return quantize(coefficient_grid(code, d), q)


def reconstruct_grid(grid: np.ndarray, d: PartitionedDictionary) -> np.ndarray:
    """Regular inverse 2D DCT of a real coefficient grid, kept on the support."""
    image = scipy.fft.idctn(grid, type=2, norm="ortho")
    return image.ravel()[d.support_idx]


def reconstruct(levels: np.ndarray, q: QuantParams, d: PartitionedDictionary) -> np.ndarray:
    levels = np.asarray(levels)
    if levels.shape != (d.height, d.width):
        raise ValueError("level grid does not match the bounding box")
    return reconstruct_grid(levels.astype(float) * q.step, d)


def distortion(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> tuple[float, float]:
    """Sum of squared errors and PSNR in dB for two signals on one support."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("signals live on different supports")
    sse = float(((a - b) ** 2).sum())
    if sse == 0.0:
        return 0.0, float("inf")
    psnr = 10.0 * np.log10(peak * peak * a.size / sse)
    return sse, psnr

import numpy as np
import pytest

from nrec import dictionary as d
from nrec import geometry as g
from nrec import transform as tx


@pytest.fixture(scope="module")
def inventory():
    return g.canonicalize()


@pytest.fixture(scope="module")
def type2_dict(inventory):
    shape = next(
        s for s in inventory.shapes
        if s.shape_class == g.ShapeType.TYPE2 and {s.width, s.height} == {8, 16}
    )
    return d.build_dictionary(shape)


def test_single_atom_signal(type2_dict):
    signal = 5.0 * type2_dict.atom(2, 3)
    code = tx.omp(type2_dict, signal, eps_res=1e-9, k_max=10)
    assert code.selected == [(2, 3)]
    assert code.coefficients[0] == pytest.approx(5.0, abs=1e-9)
    assert code.residual_norm < 1e-9


def test_zero_signal(type2_dict):
    code = tx.omp(type2_dict, np.zeros(type2_dict.area))
    assert code.selected == []
    assert code.residual_norm == 0.0


def test_exact_recovery_orthogonal_atoms():
    # On a rectangular support every atom is orthonormal, so any k-sparse
    # combination is recovered exactly.
    dic = d.build_dictionary(np.ones((8, 8), dtype=bool))
    rng = np.random.default_rng(7)
    for _ in range(100):
        k = int(rng.integers(1, 6))
        idx = rng.choice(dic.n_atoms, size=k, replace=False)
        coeffs = rng.normal(size=k) * 10
        signal = coeffs @ dic.atoms[idx]
        code = tx.omp(dic, signal, eps_res=0.0, k_max=k)
        assert code.residual_norm < 1e-6 * np.linalg.norm(signal)
        assert sorted(code.selected) == sorted((i % 8, i // 8) for i in idx)
        hist = np.asarray(code.residual_history)
        assert (np.diff(hist) <= 1e-9 * np.linalg.norm(signal)).all()


def test_three_term_recovery_nr(type2_dict):
    # Mutually near-orthogonal atoms of the NR dictionary are recovered to
    # the stopping tolerance.
    gram = np.abs(type2_dict.gram())
    idx = [type2_dict.atom_index(0, 0)]
    for j in range(type2_dict.n_atoms):
        if all(gram[j, i] < 1e-9 for i in idx) and not type2_dict.degenerate[j]:
            idx.append(j)
        if len(idx) == 3:
            break
    assert len(idx) == 3
    signal = np.array([4.0, -2.5, 1.25]) @ type2_dict.atoms[idx]
    code = tx.omp(type2_dict, signal, eps_res=0.0, k_max=3)
    assert code.residual_norm < 1e-6 * np.linalg.norm(signal)


def test_residual_orthogonal_to_selected(type2_dict):
    rng = np.random.default_rng(3)
    for _ in range(20):
        signal = rng.normal(size=type2_dict.area)
        code = tx.omp(type2_dict, signal, eps_res=1e-3, k_max=16)
        approx = tx.approximation(code, type2_dict)
        residual = signal - approx
        for (u, v) in code.selected:
            ip = abs(residual @ type2_dict.atom(u, v))
            assert ip < 1e-8 * np.linalg.norm(signal)


def test_degenerate_atoms_never_selected(inventory):
    rng = np.random.default_rng(11)
    for s in inventory.shapes[:4]:
        dic = d.build_dictionary(s)
        if not dic.degenerate.any():
            continue
        signal = rng.normal(size=dic.area)
        code = tx.omp(dic, signal, eps_res=1e-4)
        for (u, v) in code.selected:
            assert not dic.degenerate[dic.atom_index(u, v)]


def test_empty_code_gives_zero_block(type2_dict):
    code = tx.SparseCode([], np.zeros(0), 0.0)
    block = tx.to_coefficient_block(code, type2_dict, tx.QuantParams(1.0))
    assert block.shape == (type2_dict.height, type2_dict.width)
    assert not block.any()


def test_single_atom_scaling_rule(type2_dict):
    step = 0.5
    s = type2_dict.restriction_norms[type2_dict.atom_index(4, 2)]
    code = tx.SparseCode([(4, 2)], np.array([s * step * 7]), 0.0)
    block = tx.to_coefficient_block(code, type2_dict, tx.QuantParams(step))
    assert block[2, 4] == 7
    block[2, 4] = 0
    assert not block.any()


def test_scaling_identity_unquantized(inventory):
    # Inverse DCT restricted to the support reproduces the OMP approximation
    # exactly for unquantized coefficient grids, for every shape type.
    rng = np.random.default_rng(5)
    per_type = {}
    for s in inventory.shapes:
        per_type.setdefault(s.shape_class, s)
    for s in per_type.values():
        dic = d.build_dictionary(s)
        for _ in range(10):
            signal = rng.normal(size=dic.area) * 20
            code = tx.omp(dic, signal, eps_res=1e-2)
            grid = tx.coefficient_grid(code, dic)
            recon = tx.reconstruct_grid(grid, dic)
            approx = tx.approximation(code, dic)
            assert np.abs(recon - approx).max() < 1e-9


def test_reconstruct_zero_block(type2_dict):
    z = np.zeros((type2_dict.height, type2_dict.width), dtype=np.int32)
    out = tx.reconstruct(z, tx.QuantParams(1.0), type2_dict)
    assert not out.any()


def test_dc_only_rectangular():
    dic = d.build_dictionary(np.ones((8, 8), dtype=bool))
    levels = np.zeros((8, 8), dtype=np.int32)
    levels[0, 0] = 5
    out = tx.reconstruct(levels, tx.QuantParams(2.0), dic)
    assert np.allclose(out, 5 * 2.0 / 8.0)


def test_quantization_error_bound(type2_dict):
    rng = np.random.default_rng(9)
    basis = d.dct_basis_images(type2_dict.width, type2_dict.height)
    step = 0.25
    q = tx.QuantParams(step)
    for _ in range(20):
        signal = rng.normal(size=type2_dict.area) * 10
        code = tx.omp(type2_dict, signal, eps_res=1e-3)
        if not code.selected:
            continue
        recon = tx.reconstruct(tx.to_coefficient_block(code, type2_dict, q), q, type2_dict)
        approx = tx.approximation(code, type2_dict)
        bound = 0.0
        for (u, v) in code.selected:
            i = type2_dict.atom_index(u, v)
            bound += np.abs(basis[i]).max() / type2_dict.restriction_norms[i]
        assert np.abs(recon - approx).max() <= step / 2 * bound + 1e-12


def test_quantized_roundtrip_small_step(type2_dict):
    rng = np.random.default_rng(13)
    q = tx.QuantParams(1e-4)
    signal = rng.normal(size=type2_dict.area) * 10
    code = tx.omp(type2_dict, signal, eps_res=1e-3)
    recon = tx.reconstruct(tx.to_coefficient_block(code, type2_dict, q), q, type2_dict)
    approx = tx.approximation(code, type2_dict)
    assert np.abs(recon - approx).max() < 1e-3


def test_distortion():
    a = np.zeros(64)
    assert tx.distortion(a, a) == (0.0, float("inf"))
    sse, _ = tx.distortion(a, a + 1.0)
    assert sse == pytest.approx(64.0)
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=50), rng.normal(size=50)
    sse, psnr = tx.distortion(x, y, peak=255.0)
    brute = sum((float(xi) - float(yi)) ** 2 for xi, yi in zip(x, y))
    assert sse == pytest.approx(brute, abs=1e-9)
    assert psnr == pytest.approx(10 * np.log10(255 ** 2 * 50 / brute), abs=1e-9)


def test_invalid_inputs(type2_dict):
    with pytest.raises(ValueError):
        tx.QuantParams(0.0)
    with pytest.raises(ValueError):
        tx.omp(type2_dict, np.zeros(3))
    with pytest.raises(ValueError):
        tx.omp(type2_dict, np.zeros(type2_dict.area), eps_res=-1.0)
    with pytest.raises(ValueError):
        tx.omp(type2_dict, np.zeros(type2_dict.area), k_max=0)

import numpy as np
import pytest
import scipy.fft

from nrec import dictionary as d
from nrec import geometry as g


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


def gram_oracle(mask):
    """Inner products of support-restricted DCT images via scipy transforms.

    Independent route: masking a basis image and forward-transforming it
    yields its inner products with every full basis in one shot.
    """
    h, w = mask.shape
    n = h * w
    raw = np.zeros((n, n))
    for v in range(h):
        for u in range(w):
            img = np.zeros((h, w))
            img[v, u] = 1.0
            basis_img = scipy.fft.idctn(img, type=2, norm="ortho")
            coeffs = scipy.fft.dctn(np.where(mask, basis_img, 0.0), type=2, norm="ortho")
            raw[v * w + u] = coeffs.ravel()
    norms = np.sqrt(np.clip(np.diag(raw), 0, None))
    safe = np.where(norms < 1e-12, 1.0, norms)
    return raw / np.outer(safe, safe), norms


def test_rectangular_support_is_orthonormal():
    dic = d.build_dictionary(np.ones((8, 8), dtype=bool))
    assert dic.n_atoms == 64
    assert np.allclose(dic.gram(), np.eye(64), atol=1e-9)
    assert np.allclose(dic.restriction_norms, 1.0, atol=1e-12)


def test_atom_count_equals_box_area(inventory):
    for s in inventory.shapes:
        dic = d.build_dictionary(s)
        assert dic.n_atoms == s.width * s.height
        assert dic.area == s.area


def test_type2_exemplar_has_128_atoms(type2_dict):
    assert type2_dict.n_atoms == 128


def test_unit_norm_and_self_correlation(type2_dict):
    norms = np.linalg.norm(type2_dict.atoms, axis=1)
    assert np.allclose(norms[~type2_dict.degenerate], 1.0, atol=1e-12)
    assert type2_dict.correlation((3, 3), (3, 3)) == pytest.approx(1.0, abs=1e-12)


def test_restriction_norms_at_most_one(inventory):
    for s in inventory.shapes:
        dic = d.build_dictionary(s)
        assert (dic.restriction_norms <= 1.0 + 1e-12).all()


def test_gram_symmetric_unit_diagonal(type2_dict):
    gram = type2_dict.gram()
    assert np.allclose(gram, gram.T, atol=1e-12)
    assert np.allclose(np.diag(gram), 1.0, atol=1e-12)


def test_parseval_over_support(inventory):
    for s in inventory.shapes:
        dic = d.build_dictionary(s)
        assert abs((dic.restriction_norms ** 2).sum() - s.area) < 1e-6


def test_gram_matches_scipy_oracle(type2_dict):
    oracle, norms = gram_oracle(type2_dict.mask)
    assert np.allclose(np.abs(oracle), np.abs(type2_dict.gram()), atol=1e-9)
    assert np.allclose(norms, type2_dict.restriction_norms, atol=1e-9)


def test_correlation_map_symmetry(type2_dict):
    cm_a = d.correlation_map(type2_dict, (3, 3), 2)
    assert cm_a[2, 2] == pytest.approx(1.0)
    # symmetry of the inner product: corr(p, p+delta) == corr(p+delta, p)
    cm_b = d.correlation_map(type2_dict, (4, 5), 2)
    assert cm_a[2 + 2, 2 + 1] == pytest.approx(cm_b[2 - 2, 2 - 1])


def test_correlation_map_rectangular_zero():
    dic = d.build_dictionary(np.ones((8, 8), dtype=bool))
    cm = d.correlation_map(dic, (3, 3), 2)
    off = cm.copy()
    off[2, 2] = 0.0
    assert np.nanmax(off) < 1e-9


def test_type2_checkerboard_at_3_3(type2_dict):
    cm = d.correlation_map(type2_dict, (3, 3), 2)
    odd, even = [], []
    for dv in range(-2, 3):
        for du in range(-2, 3):
            if du == 0 and dv == 0:
                continue
            val = cm[dv + 2, du + 2]
            if np.isnan(val):
                continue
            (odd if (abs(du) + abs(dv)) % 2 else even).append(val)
    hi, lo = np.mean(odd), np.mean(even)
    if hi < lo:
        hi, lo = lo, hi
    assert hi / max(lo, 1e-15) >= 3.0


def test_far_correlations_negligible(inventory):
    # Over every atom pair at l1 distance > 5 across all 19 dictionaries,
    # at least 95% fall below 0.05.
    total = below = 0
    for s in inventory.shapes:
        dic = d.build_dictionary(s)
        gram = np.abs(dic.gram())
        uu, vv = np.meshgrid(np.arange(dic.width), np.arange(dic.height))
        u = uu.ravel()
        v = vv.ravel()
        dist = np.abs(u[:, None] - u[None, :]) + np.abs(v[:, None] - v[None, :])
        far = dist > 5
        total += int(far.sum())
        below += int((gram[far] < 0.05).sum())
    assert below / total >= 0.95


def test_split_neighborhood_partition(type2_dict):
    for pos in [(0, 0), (3, 3), (7, 14), (2, 9)]:
        part = d.split_neighborhood(type2_dict, pos, 4, 0.2)
        nt = set(d.causal_neighborhood(type2_dict, pos, 4))
        assert set(part.nc) | set(part.no) == nt
        assert not set(part.nc) & set(part.no)


def test_split_neighborhood_rectangular_all_orthogonal():
    dic = d.build_dictionary(np.ones((8, 8), dtype=bool))
    part = d.split_neighborhood(dic, (2, 2), 4, 0.2)
    assert part.nc == ()
    assert set(part.no) == set(d.causal_neighborhood(dic, (2, 2), 4))


def test_split_neighborhood_threshold_one(type2_dict):
    part = d.split_neighborhood(type2_dict, (3, 3), 4, 1.0)
    assert part.nc == ()


def test_nc_size_two_or_three_dominates_interior(type2_dict):
    sizes = []
    for v in range(1, type2_dict.height - 4):
        for u in range(1, type2_dict.width - 4):
            part = d.split_neighborhood(type2_dict, (u, v), 4, 0.2)
            sizes.append(len(part.nc))
    frac = sum(1 for n in sizes if n in (2, 3)) / len(sizes)
    assert frac >= 0.5


def test_nc_pattern_similar_within_type(inventory):
    # Same-type shapes agree on correlated-offset membership at matching
    # relative positions for >= 80% of shared causal offsets.
    by_type = {}
    for s in inventory.shapes:
        by_type.setdefault(s.shape_class, []).append(s)
    pairs = [(by_type[g.ShapeType.TYPE2][1], by_type[g.ShapeType.TYPE2][2]),
             (by_type[g.ShapeType.TYPE1][0], by_type[g.ShapeType.TYPE1][1])]
    for a, b in pairs:
        da, db = d.build_dictionary(a), d.build_dictionary(b)
        agree = tested = 0
        for va in range(da.height):
            for ua in range(da.width):
                ub = min(int(round(ua * db.width / da.width)), db.width - 1)
                vb = min(int(round(va * db.height / da.height)), db.height - 1)
                pa = d.split_neighborhood(da, (ua, va), 4, 0.2)
                pb = d.split_neighborhood(db, (ub, vb), 4, 0.2)
                shared = set(pa.nt) & set(pb.nt)
                for off in shared:
                    tested += 1
                    agree += (off in pa.nc) == (off in pb.nc)
        assert agree / tested >= 0.80, (a.shape_id, b.shape_id, agree / tested)


def test_invalid_arguments(type2_dict):
    with pytest.raises(ValueError):
        d.split_neighborhood(type2_dict, (0, 0), 0, 0.2)
    with pytest.raises(ValueError):
        d.split_neighborhood(type2_dict, (0, 0), 4, 0.0)
    with pytest.raises(IndexError):
        type2_dict.atom(99, 0)
    with pytest.raises(ValueError):
        d.build_dictionary(np.ones((6, 8), dtype=bool))

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liecover.bounds import det_lower_bound
from liecover.counting import tail_delta
from liecover.covering import (
    OracleResult,
    bracket_covering,
    brute_cover_oracle,
    build_truncated_operator,
    farthest_first,
    greedy_cover,
    operator_lipschitz,
    packing_lower,
    sample_ball_image,
    volumetric_lower,
)
from liecover.groups import Group, ResolutionError, haar_grid
from liecover.kernel import make_kernel, q_apply, random_coefficients, unit_ball_lipschitz
from liecover.symbols import make_symbol


def _sup(a, b):
    return np.max(np.abs(a - b), axis=-1)


def _naive_farthest_first(values):
    """Unpruned traversal: every distance evaluated at every step."""
    c0 = values.mean(axis=0)
    dmin = _sup(values, c0)
    radii = [dmin.max()]
    while dmin.max() > 0:
        i = int(np.argmax(dmin))
        dmin = np.minimum(dmin, _sup(values, values[i]))
        radii.append(dmin.max())
    return np.array(radii)


@pytest.fixture(scope="module")
def t1_operator():
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 6.0, t=0.5))
    return build_truncated_operator(k, 3.0, haar_grid(Group.TORUS1, 32))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(1, 6), count=st.integers(2, 120))
def test_pruned_traversal_matches_naive(seed, dim, count):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    ff = farthest_first(values)
    naive = _naive_farthest_first(values)
    assert np.allclose(ff.radii, naive[:len(ff.radii)], rtol=0, atol=1e-14)
    assert np.all(np.diff(ff.radii) <= 0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), eps=st.floats(0.05, 3.0))
def test_greedy_net_covers_and_packing_is_separated(seed, eps):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((150, 3))
    k, centers = greedy_cover(values, eps)
    cvals = np.concatenate([values.mean(axis=0)[None], values[centers[1:]]])
    dist = np.max(np.abs(values[:, None, :] - cvals[None, :, :]), axis=2)
    assert dist.min(axis=1).max() <= eps
    assert k == len(centers)
    p = packing_lower(values, eps)
    ff = farthest_first(values, stop_radius=2 * eps)
    chosen = np.concatenate([values.mean(axis=0)[None], values[ff.centers[1:p]]])
    if p > 1:
        d = np.max(np.abs(chosen[:, None, :] - chosen[None, :, :]), axis=2)
        assert d[np.triu_indices(p, 1)].min() > 2 * eps
    assert p <= k


def test_cover_count_monotone_and_one_at_diameter(t1_operator):
    cloud = sample_ball_image(t1_operator, 400, 3)
    ff = farthest_first(cloud.values)
    eps = np.linspace(0.02, 2.0, 40)
    counts = [ff.cover_count(e) for e in eps]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert ff.cover_count(cloud.sup_norms.max() * 1.0000001) == 1
    partial = farthest_first(cloud.values, stop_radius=0.5)
    with pytest.raises(ValueError):
        partial.cover_count(0.01)


def test_operator_matrix_reproduces_q_apply(t1_operator):
    op = t1_operator
    k = op.kernel
    small = make_kernel(make_symbol(Group.TORUS1, "heat", 3.0, t=0.5))
    c = random_coefficients(small, 4)
    via_q = q_apply(c, small, op.grid).values
    via_matrix = op.apply(op.coefficient_vector(c))
    assert np.allclose(via_q, via_matrix, atol=1e-13)
    assert op.complex_dim == 5 and op.real_dim == 10  # |k| <= 2
    assert operator_lipschitz(op) == pytest.approx(unit_ball_lipschitz(k, 3.0), rel=1e-14)


def test_l2_real_matrix_gives_grid_l2_norm(t1_operator):
    op = t1_operator
    rng = np.random.default_rng(1)
    v = rng.standard_normal(op.real_dim)
    z = v[:op.complex_dim] + 1j * v[op.complex_dim:]
    vals = op.apply(z)
    l2 = math.sqrt(float(np.sum(op.grid.weights * np.abs(vals) ** 2)))
    assert np.linalg.norm(op.l2_real_matrix() @ v) == pytest.approx(l2, rel=1e-12)
    # exact quadrature: the grid L^2 norm of Q_A C equals ||H C||
    assert np.linalg.norm(op.l2_real_matrix(), 2) == pytest.approx(1.0, rel=1e-12)


def test_ball_cloud_lies_in_the_ball(t1_operator):
    cloud = sample_ball_image(t1_operator, 501, 9)
    norms = np.linalg.norm(cloud.coeffs, axis=1)
    assert norms.max() <= 1 + 1e-12
    assert np.mean(np.isclose(norms, 1.0)) >= 0.7
    assert np.allclose(cloud.coeffs[0], -cloud.coeffs[1])
    again = sample_ball_image(t1_operator, 501, 9)
    assert np.array_equal(cloud.values, again.values)


def test_operator_needs_resolution():
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 6.0, t=0.5))
    with pytest.raises(ResolutionError):
        build_truncated_operator(k, 6.0, haar_grid(Group.TORUS1, 8))
    with pytest.raises(ValueError):
        build_truncated_operator(k, 7.0, haar_grid(Group.TORUS1, 32))


def test_volumetric_two_routes():
    sym = make_symbol(Group.SU2, "heat", 3.0, t=0.4)
    k = make_kernel(sym)
    for lam, eps in ((1.5, 0.2), (2.5, 0.05)):
        assert volumetric_lower(k, lam, eps) == pytest.approx(det_lower_bound(sym, lam, eps), rel=1e-13)


# ---------------------------------------------------------------------------
# exhaustive oracle


@pytest.mark.parametrize("h,eps,expected", [(1.0, 0.5, 2), (1.0, 0.2, 5), (1.0, 0.3, 4), (2.5, 1.0, 3), (0.1, 1.0, 1)])
def test_oracle_on_segments(h, eps, expected):
    r = brute_cover_oracle(np.array([[h], [0.0]]), eps)
    assert r.exact and r.value == expected


def test_oracle_rank_one_two_column_matrix_is_a_segment():
    r = brute_cover_oracle(np.array([[1.0, 1.0], [0.0, 0.0]]), 0.5)
    assert r.value == math.ceil(math.sqrt(2) / 0.5)


def test_oracle_disc_against_known_disc_coverings():
    # minimal radius to cover the unit disc by n discs: r_4 = 1/sqrt(2), r_5 ~ 0.6098
    assert brute_cover_oracle(np.eye(2), 1.0).value == 1
    r = brute_cover_oracle(np.eye(2), 0.65, max_refine=0, time_limit=5.0, spacing=0.65 / 10)
    assert r.lower <= 5 <= r.upper
    r = brute_cover_oracle(np.eye(2), 0.9, max_refine=0, time_limit=5.0, spacing=0.9 / 12)
    assert r.lower <= 3 <= r.upper and r.lower >= 2


def test_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        brute_cover_oracle(np.eye(3), 0.5)
    with pytest.raises(ValueError):
        brute_cover_oracle(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        brute_cover_oracle(np.eye(2), 0.5, spacing=0.6)


def test_oracle_bracket_value_requires_closure():
    with pytest.raises(ValueError):
        OracleResult(3, 5, 0.1).value


# ---------------------------------------------------------------------------
# truncation sandwich


def _bracket(seed=1, cloud=256, eps=(0.5, 0.4, 0.3, 0.1)):
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 6.0, t=1.0))
    return k, bracket_covering(k, 2.0, 4.0, eps, haar_grid(Group.TORUS1, 64), cloud_size=cloud, seed=seed)


def test_bracket_structure_and_undefined_rows():
    k, rep = _bracket()
    assert rep.column("eps") == sorted(rep.column("eps"))
    delta = tail_delta(k.symbol, 2.0)
    for e, ok, shift in zip(rep.column("eps"), rep.column("bracket_ok"), rep.column("n_cover_small_shift")):
        if e <= delta:
            assert ok == -1 and shift == -1
        else:
            assert ok in (0, 1)
    # small clouds may break the upper side of the bracket; only structure is checked here
    assert rep.violations() == sum(1 for ok in rep.column("bracket_ok") if ok == 0)
    for n_small, n_large, pack in zip(rep.column("n_cover_small"), rep.column("n_cover_est"),
                                      rep.column("n_pack_lower")):
        assert pack <= n_large and n_small >= 1
    assert set(rep.meta) >= {"grid_resolution", "lipschitz_tax", "normQ", "normQ_A_large"}


def test_bracket_is_byte_reproducible():
    texts = []
    for _ in range(2):
        _, rep = _bracket(seed=5)
        buf = io.StringIO()
        rep.to_csv(buf, preamble="# p")
        texts.append(buf.getvalue())
    assert texts[0] == texts[1]
    _, other = _bracket(seed=6)
    buf = io.StringIO()
    other.to_csv(buf, preamble="# p")
    assert buf.getvalue() != texts[0]


def test_bracket_rejects_bad_lambdas():
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 6.0, t=1.0))
    with pytest.raises(ValueError):
        bracket_covering(k, 4.0, 2.0, [0.5], haar_grid(Group.TORUS1, 64))
    with pytest.raises(ValueError):
        bracket_covering(k, 2.0, 4.0, [-0.5], haar_grid(Group.TORUS1, 64))

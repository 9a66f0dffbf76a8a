import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liecover.groups import (
    Group,
    ResolutionError,
    distance,
    dual_arrays,
    enumerate_dual,
    evaluate_irrep,
    haar_grid,
    identity,
    inverse,
    irrep_values,
    make_label,
    multiply,
    sample_haar,
    su2_from_euler,
    su2_to_euler,
    verify_orthogonality,
    wigner_small_d,
    wigner_small_d_factorial,
)

GROUPS = list(Group)


def _brute_dual(group, lam):
    """Independent enumeration by scanning a box of indices."""
    out = []
    if group is Group.SU2:
        for m in range(0, 4 * int(lam) + 4):
            if 1 + m * (m + 2) / 4 <= lam * lam:
                out.append((m, m + 1))
    elif group is Group.TORUS1:
        for k in range(-int(lam) - 2, int(lam) + 3):
            if 1 + k * k <= lam * lam:
                out.append((k, 1))
    else:
        r = range(-int(lam) - 2, int(lam) + 3)
        for k in itertools.product(r, r):
            if 1 + k[0] ** 2 + k[1] ** 2 <= lam * lam:
                out.append((k, 1))
    return out


@pytest.mark.parametrize("group", GROUPS)
@pytest.mark.parametrize("lam", [1.01, 1.5, 2.0, 3.3, 7.0, 12.5])
def test_enumeration_matches_box_scan(group, lam):
    labels = enumerate_dual(group, lam)
    got = sorted((lab.index, lab.dim) for lab in labels)
    assert got == sorted(_brute_dual(group, lam))
    weights = [lab.weight for lab in labels]
    assert weights == sorted(weights)


def test_small_duals():
    assert len(enumerate_dual(Group.TORUS1, 2.0)) == 3
    assert len(enumerate_dual(Group.TORUS2, 2.0)) == 9
    assert [lab.index for lab in enumerate_dual(Group.SU2, 2.0)] == [0, 1, 2]


def test_boundary_weight_is_included():
    # <k=3> = sqrt(10) exactly on the boundary
    labels = enumerate_dual(Group.TORUS1, math.sqrt(10.0))
    assert max(abs(lab.index) for lab in labels) == 3


def test_lambda_must_exceed_one():
    with pytest.raises(ValueError):
        enumerate_dual(Group.SU2, 1.0)


def test_dual_arrays_agree_with_labels():
    for g in GROUPS:
        idx, dims, ev = dual_arrays(g, 5.0)
        labels = enumerate_dual(g, 5.0)
        assert len(labels) == len(ev)
        assert all(lab.eigenvalue == e and lab.dim == d for lab, d, e in zip(labels, dims, ev))


def test_su2_casimir_values():
    lab = make_label(Group.SU2, 3)
    assert lab.dim == 4 and lab.eigenvalue == pytest.approx(15 / 4)
    with pytest.raises(ValueError):
        make_label(Group.SU2, -1)


def test_group_parse_aliases():
    assert Group.parse("t1") is Group.TORUS1
    assert Group.parse("SU(2)") is Group.SU2
    with pytest.raises(ValueError):
        Group.parse("SO3")


# ---------------------------------------------------------------------------
# representations


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), group=st.sampled_from(GROUPS))
def test_irreps_are_unitary_homomorphisms(seed, group):
    x, y = sample_haar(group, 2, seed)
    xy = multiply(group, x, y)
    for lab in enumerate_dual(group, 4.0):
        ex, ey, exy = (evaluate_irrep(group, lab, p) for p in (x, y, xy))
        assert np.allclose(exy, ex @ ey, atol=1e-12)
        assert np.allclose(ex @ ex.conj().T, np.eye(lab.dim), atol=1e-12)
        e_id = evaluate_irrep(group, lab, identity(group))
        assert np.allclose(e_id, np.eye(lab.dim), atol=1e-13)
        assert np.allclose(evaluate_irrep(group, lab, inverse(group, x)), ex.conj().T, atol=1e-12)


def test_irrep_values_batch_matches_single():
    pts = sample_haar(Group.SU2, 5, 3)
    labels = enumerate_dual(Group.SU2, 3.0)
    vals = irrep_values(Group.SU2, labels, pts)
    for lab, v in zip(labels, vals):
        for p, vp in zip(pts, v):
            assert np.allclose(evaluate_irrep(Group.SU2, lab, p), vp, atol=1e-14)


@pytest.mark.parametrize("m", [0, 1, 2, 5, 9])
def test_wigner_d_two_routes(m):
    for beta in (0.0, 0.3, 1.7, math.pi):
        assert np.allclose(wigner_small_d(m, beta), wigner_small_d_factorial(m, beta), atol=1e-12)


def test_wigner_d_against_sympy():
    sympy = pytest.importorskip("sympy")
    from sympy.physics.quantum.spin import Rotation

    m, beta = 3, 0.7
    j = sympy.Rational(m, 2)
    ref = np.array([[complex(Rotation.d(j, j - a, j - c, beta).doit().evalf()) for c in range(m + 1)]
                    for a in range(m + 1)])
    assert np.allclose(wigner_small_d(m, beta), ref, atol=1e-13)


def test_euler_round_trip():
    u = sample_haar(Group.SU2, 50, 11)
    ang = su2_to_euler(u)
    back = su2_from_euler(ang[:, 0], ang[:, 1], ang[:, 2])
    assert np.allclose(back, u, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), group=st.sampled_from(GROUPS))
def test_distance_is_bi_invariant_and_bounds_irrep_variation(seed, group):
    x, y, g = sample_haar(group, 3, seed)
    d = distance(group, x, y)
    assert distance(group, multiply(group, g, x), multiply(group, g, y)) == pytest.approx(d, abs=1e-9)
    assert distance(group, multiply(group, x, g), multiply(group, y, g)) == pytest.approx(d, abs=1e-9)
    for lab in enumerate_dual(group, 3.0):
        diff = np.linalg.norm(evaluate_irrep(group, lab, x) - evaluate_irrep(group, lab, y), 2)
        assert diff <= lab.weight * d + 1e-12


# ---------------------------------------------------------------------------
# quadrature


@pytest.mark.parametrize("group,res", [(Group.TORUS1, 16), (Group.TORUS2, 8), (Group.SU2, 10)])
def test_grid_weights_are_a_probability(group, res):
    grid = haar_grid(group, res)
    assert np.all(grid.weights > 0)
    assert math.fsum(grid.weights) == pytest.approx(1.0, abs=1e-14)


def test_orthogonality_inside_and_beyond_the_exact_range():
    grid = haar_grid(Group.TORUS1, 8)
    inside = [lab for lab in enumerate_dual(Group.TORUS1, 4.0) if abs(lab.index) <= 3]
    assert verify_orthogonality(Group.TORUS1, inside, grid) < 1e-13
    too_fine = enumerate_dual(Group.TORUS1, 6.0)
    with pytest.raises(ResolutionError):
        verify_orthogonality(Group.TORUS1, too_fine, grid)


def test_su2_grid_integrates_characters():
    grid = haar_grid(Group.SU2, 12)
    for lab in enumerate_dual(Group.SU2, grid.single_weight_limit):
        vals = irrep_values(Group.SU2, [lab], grid.points)[0]
        chi = np.trace(vals, axis1=1, axis2=2)
        expected = 1.0 if lab.index == 0 else 0.0
        assert abs(grid.integrate(chi) - expected) < 1e-12


def test_sample_haar_is_deterministic():
    for g in GROUPS:
        assert np.array_equal(sample_haar(g, 7, 42), sample_haar(g, 7, 42))
    with pytest.raises(ValueError):
        sample_haar(Group.TORUS1, 0, 1)


def test_haar_samples_average_characters_to_zero():
    pts = sample_haar(Group.SU2, 20000, 5)
    lab = make_label(Group.SU2, 2)
    chi = np.trace(irrep_values(Group.SU2, [lab], pts)[0], axis1=1, axis2=2)
    # mean of a nontrivial character: zero with standard error 1/sqrt(N)
    assert abs(chi.mean()) < 5.0 / math.sqrt(len(pts))


def test_fill_radius_on_torus():
    grid = haar_grid(Group.TORUS2, 10, self_test=False)
    assert grid.fill_radius == pytest.approx(math.sqrt(2) * math.pi / 10)
    probe = sample_haar(Group.TORUS2, 500, 1)
    dmin = np.min(np.stack([distance(Group.TORUS2, probe, p) for p in grid.points]), axis=0)
    assert dmin.max() <= grid.fill_radius

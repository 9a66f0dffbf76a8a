import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liecover.groups import Group, ResolutionError, distance, enumerate_dual, evaluate_irrep, haar_grid, sample_haar
from liecover.kernel import (
    check_invariance,
    choose_resolution,
    eval_kernel,
    kernel_gram,
    kernel_lipschitz,
    kernel_matrix,
    kernel_section,
    make_kernel,
    operator_norms,
    q_apply,
    random_coefficients,
    reproducing_residual,
    rkhs_eval,
    rkhs_inner,
    search_negative_gram,
    sqrt_coefficients,
    unit_ball_lipschitz,
    zero_coefficients,
)
from liecover.symbols import UncertifiedSymbolError, custom_symbol, make_symbol, trace_norm

KERNELS = {
    Group.TORUS1: lambda: make_kernel(make_symbol(Group.TORUS1, "heat", 8.0, t=0.3)),
    Group.TORUS2: lambda: make_kernel(make_symbol(Group.TORUS2, "polynomial", 4.0, beta=3.0)),
    Group.SU2: lambda: make_kernel(make_symbol(Group.SU2, "subgaussian", 4.0, omega=0.2, gamma=1.0)),
}


def _kernel_by_definition(kernel, x, y):
    """K(x, y) = sum d Tr[xi(x) sigma xi(y)^*], one label at a time."""
    total = 0j
    for lab in kernel.labels:
        ex = evaluate_irrep(kernel.group, lab, x)
        ey = evaluate_irrep(kernel.group, lab, y)
        total += lab.dim * np.trace(ex @ kernel.symbol[lab] @ ey.conj().T)
    return total


@pytest.mark.parametrize("group", list(Group))
def test_kernel_matches_definition(group):
    k = KERNELS[group]()
    xs = sample_haar(group, 4, 1)
    ys = sample_haar(group, 3, 2)
    km = kernel_matrix(k, xs, ys)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert km[i, j] == pytest.approx(_kernel_by_definition(k, x, y), abs=1e-12)


def test_torus_heat_kernel_closed_form():
    # K(x, y) = sum_k e^{-t k^2} e^{i k (x - y)}
    t = 0.3
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 8.0, t=t))
    x, y = np.array([0.4]), np.array([2.1])
    ks = np.arange(-7, 8)
    ref = np.sum(np.exp(-t * ks ** 2) * np.exp(1j * ks * (x[0] - y[0])))
    assert eval_kernel(k, x, y) == pytest.approx(ref, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), group=st.sampled_from(list(Group)))
def test_gram_is_hermitian_psd_and_invariant(seed, group):
    k = KERNELS[group]()
    pts = sample_haar(group, 12, seed)
    gram, lo = kernel_gram(k, pts)
    assert np.allclose(gram, gram.conj().T, atol=1e-12)
    assert lo >= -1e-10 * np.trace(gram).real
    others = sample_haar(group, 12, seed + 1)
    g = sample_haar(group, 1, seed + 2)[0]
    assert check_invariance(k, list(zip(pts, others)), g) < 1e-11


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), group=st.sampled_from(list(Group)))
def test_reproducing_and_section_norm(seed, group):
    k = KERNELS[group]()
    y = sample_haar(group, 1, seed)[0]
    c = random_coefficients(k, seed)
    assert reproducing_residual(c, k, y) <= 1e-12 * (1 + c.norm)
    ky = kernel_section(k, y)
    # ||K_y||^2 = K(y, y) and <K_x, K_y> = K(y, x)
    assert ky.norm ** 2 == pytest.approx(eval_kernel(k, y, y).real, rel=1e-12)
    x = sample_haar(group, 1, seed + 7)[0]
    assert rkhs_inner(kernel_section(k, x), ky) == pytest.approx(eval_kernel(k, y, x), abs=1e-12)


def test_inner_product_linearity():
    k = KERNELS[Group.SU2]()
    a, b = random_coefficients(k, 1), random_coefficients(k, 2)
    z = 0.3 - 1.1j
    assert rkhs_inner(a.scale(z), b) == pytest.approx(z * rkhs_inner(a, b))
    assert rkhs_inner(a, b.scale(z)) == pytest.approx(np.conj(z) * rkhs_inner(a, b))
    assert rkhs_inner(a, a).real == pytest.approx(a.norm_sq)
    assert zero_coefficients(k).norm == 0.0
    unit = random_coefficients(k, 5, unit=True)
    assert unit.norm == pytest.approx(1.0)


def test_identity_coefficients_give_the_kernel_at_identity():
    # C = H gives g(x) = sum d Tr[H xi(x) H] = K(x, e)
    k = KERNELS[Group.SU2]()
    h = sqrt_coefficients(k)
    x = sample_haar(Group.SU2, 1, 9)[0]
    assert rkhs_eval(h, k, x) == pytest.approx(eval_kernel(k, x, np.eye(2)), abs=1e-12)


def test_sup_bound_by_norm():
    # |g(x)| <= ||C|| sqrt(K(x, x)) = ||C|| ||Q||
    k = KERNELS[Group.TORUS2]()
    bound = operator_norms(k, 4.0).normQ
    grid = haar_grid(Group.TORUS2, 16)
    for seed in range(5):
        c = random_coefficients(k, seed, unit=True)
        assert q_apply(c, k, grid).sup <= bound * (1 + 1e-12)


def test_q_apply_needs_resolution():
    k = KERNELS[Group.TORUS1]()
    with pytest.raises(ResolutionError):
        q_apply(random_coefficients(k, 0), k, haar_grid(Group.TORUS1, 8))


def test_operator_norm_split():
    sym = make_symbol(Group.TORUS1, "heat", 12.0, t=1.0)
    k = make_kernel(sym)
    on = operator_norms(k, 2.0)
    assert on.normQ ** 2 == pytest.approx(1.7726372048266519, rel=1e-14)
    # A_2 on the circle is k in {-1, 0, 1}
    assert on.normQ_A ** 2 == pytest.approx(1.0 + 2.0 / math.e, rel=1e-14)
    assert on.normQ_A ** 2 + on.normQ_Acomp ** 2 == pytest.approx(
        on.normQ ** 2 + trace_norm(sym).tail_bound, rel=1e-14)
    with pytest.raises(ValueError):
        operator_norms(k, 13.0)


def test_lipschitz_bounds_hold_on_samples():
    k = KERNELS[Group.SU2]()
    lk = kernel_lipschitz(k)
    lq = unit_ball_lipschitz(k)
    c = random_coefficients(k, 4, unit=True)
    xs = sample_haar(Group.SU2, 30, 1)
    ys = sample_haar(Group.SU2, 30, 2)
    z = sample_haar(Group.SU2, 1, 3)[0]
    for x, y in zip(xs, ys):
        d = distance(Group.SU2, x, y)
        assert abs(eval_kernel(k, x, z) - eval_kernel(k, y, z)) <= lk * d + 1e-12
        assert abs(rkhs_eval(c, k, x) - rkhs_eval(c, k, y)) <= lq * d + 1e-12


def test_choose_resolution_meets_its_criterion():
    k = make_kernel(make_symbol(Group.TORUS1, "heat", 12.0, t=1.0))
    r = choose_resolution(k)
    assert r == 512
    grid = haar_grid(Group.TORUS1, r, self_test=False)
    assert unit_ball_lipschitz(k) * grid.fill_radius < 0.01 * math.sqrt(trace_norm(k.symbol).partial)
    coarse = haar_grid(Group.TORUS1, r // 2, self_test=False)
    assert unit_ball_lipschitz(k) * coarse.fill_radius >= 0.01 * math.sqrt(trace_norm(k.symbol).partial)
    assert choose_resolution(k, lam=4.0) <= r


def test_uncertified_kernel_blocks_rkhs_operations():
    labels = enumerate_dual(Group.TORUS1, 2.0)
    sym = custom_symbol(Group.TORUS1, 2.0, {lab: [[-1.0 if lab.index == 1 else 1.0]] for lab in labels})
    k = make_kernel(sym)
    assert not k.certified
    with pytest.raises(UncertifiedSymbolError):
        kernel_section(k, np.array([0.0]))
    found = search_negative_gram(k, 6, seeds=range(10))
    assert found is not None and found[2] < 0

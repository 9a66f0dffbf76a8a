"""Empirical covering and packing numbers of finite-rank truncations of Q.

``Q_{A_lam}`` maps the unit ball of ``l^2(A_lam)`` (complex dimension
``D = sum d^2``) into functions sampled on a quadrature grid. Distances
between images are sup-norms over the grid.

Labels on the results: greedy cover counts are *estimates* (upper estimates
for the sampled cloud only); packing counts are *certified lower bounds* for
the covering number of the true image set, since grid sup-norms never exceed
true sup-norms; the volumetric bound is a certified lower bound as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize, sparse, spatial

from .bounds import BoundParameters, lower_bound, upper_bound
from .groups import Group, IrrepLabel, QuadratureGrid, ResolutionError, irrep_values
from .kernel import RkhsCoefficients, TruncatedKernel, operator_norms
from .symbols import trace_norm
from .counting import tail_delta

__all__ = [
    "TruncatedOperatorMatrix",
    "BallCloud",
    "FarthestFirst",
    "OracleResult",
    "CoveringReport",
    "build_truncated_operator",
    "sample_ball_image",
    "farthest_first",
    "greedy_cover",
    "packing_lower",
    "bracket_covering",
    "brute_cover_oracle",
    "volumetric_lower",
    "operator_lipschitz",
]

_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class TruncatedOperatorMatrix:
    """``Q_{A_lam}`` as a complex matrix: grid points x orthonormal coefficient basis.

    Column ``(xi, i, j)`` is the image of the basis field ``e_ij / sqrt(d)`` at
    ``xi``, i.e. ``sqrt(d) (xi(x) H(xi))_{ji}``. Real coordinates of the
    coefficient space are ``(Re c, Im c)``, so ``real_dim = 2 D``.
    """

    kernel: TruncatedKernel
    lam: float
    grid: QuadratureGrid
    labels: tuple[IrrepLabel, ...]
    matrix: np.ndarray
    columns: tuple[tuple[IrrepLabel, int, int], ...]

    @property
    def complex_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    def coefficient_vector(self, c: RkhsCoefficients) -> np.ndarray:
        """Orthonormal coordinates ``sqrt(d) C_ij`` of a field restricted to ``A_lam``."""
        return np.array([math.sqrt(lab.dim) * c[lab][i, j] for lab, i, j in self.columns], dtype=complex)

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        """Images of coefficient vectors (``(D,)`` or ``(N, D)``) on the grid."""
        return np.asarray(coeffs) @ self.matrix.T

    def real_matrix(self) -> np.ndarray:
        """``[A, iA]``: complex grid values as a function of the real coordinates."""
        return np.concatenate([self.matrix, 1j * self.matrix], axis=1)

    def l2_real_matrix(self) -> np.ndarray:
        """Real matrix whose Euclidean norm of ``M v`` is the grid L^2 norm of the image."""
        sw = np.sqrt(self.grid.weights)[:, None]
        rm = self.real_matrix() * sw
        return np.concatenate([rm.real, rm.imag], axis=0)


def build_truncated_operator(kernel: TruncatedKernel, lam: float, grid: QuadratureGrid) -> TruncatedOperatorMatrix:
    if lam > kernel.lambda_max * (1.0 + _RTOL):
        raise ValueError(f"lambda {lam} exceeds the kernel's Lambda {kernel.lambda_max}")
    if grid.group is not kernel.group:
        raise ValueError(f"grid is for {grid.group}, kernel for {kernel.group}")
    if lam > grid.single_weight_limit * (1.0 + _RTOL):
        raise ResolutionError(f"grid resolves weights up to {grid.single_weight_limit:.4g}, need {lam:.4g}")
    h = kernel.require_sqrt()
    labels = tuple(lab for lab in kernel.labels if lab.weight <= lam * (1.0 + _RTOL))
    vals = irrep_values(kernel.group, labels, grid.points)
    cols, index = [], []
    for lab, v in zip(labels, vals):
        vh = v @ h[lab]
        for i in range(lab.dim):
            for j in range(lab.dim):
                cols.append(math.sqrt(lab.dim) * vh[:, j, i])
                index.append((lab, i, j))
    mat = np.stack(cols, axis=1) if cols else np.zeros((len(grid.points), 0), complex)
    return TruncatedOperatorMatrix(kernel, float(lam), grid, labels, mat, tuple(index))


def operator_lipschitz(op: TruncatedOperatorMatrix) -> float:
    """Lipschitz constant of ``Q_{A_lam} C`` for ``||C|| <= 1``: ``(sum_{A_lam} d <xi>^2 Tr sigma)^(1/2)``."""
    sym = op.kernel.symbol
    return math.sqrt(math.fsum(lab.dim * lab.weight ** 2 * float(np.trace(sym[lab]).real) for lab in op.labels))


# ---------------------------------------------------------------------------
# clouds


@dataclass(frozen=True, eq=False)
class BallCloud:
    coeffs: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1) if self.values.size else np.zeros(len(self.coeffs))


def _ball_coeffs(dim: int, count: int, rng: np.random.Generator, sphere_fraction: float = 0.75) -> np.ndarray:
    half = (count + 1) // 2
    g = rng.standard_normal((half, 2 * dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    n_sphere = int(round(sphere_fraction * half))
    radii = np.ones(half)
    radii[n_sphere:] = rng.random(half - n_sphere) ** (1.0 / (2 * dim))
    g *= radii[:, None]
    c = g[:, :dim] + 1j * g[:, dim:]
    # antipodal pairs keep the cloud centered
    both = np.empty((2 * half, dim), dtype=complex)
    both[0::2] = c
    both[1::2] = -c
    return both[:count]


def sample_ball_image(op: TruncatedOperatorMatrix, count: int, seed: int) -> BallCloud:
    """Deterministic cloud in the image of the unit ball.

    Coefficients are drawn uniformly on the unit sphere (three quarters) and
    uniformly in the ball (the rest), in antipodal pairs.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    coeffs = _ball_coeffs(op.complex_dim, count, rng)
    return BallCloud(coeffs, op.apply(coeffs))


# ---------------------------------------------------------------------------
# greedy nets


class FarthestFirst(NamedTuple):
    """Farthest-first traversal started at the cloud centroid.

    ``radii[k]`` is the covering radius of the first ``k + 1`` centers
    (``centers[0] == -1`` stands for the centroid). Radii are nonincreasing.
    """

    centers: np.ndarray
    radii: np.ndarray
    exhausted: bool

    def cover_count(self, eps: float) -> int:
        hit = np.nonzero(self.radii <= eps)[0]
        if len(hit) == 0:
            if self.exhausted:
                return len(self.radii)
            raise ValueError(f"traversal stopped before reaching radius {eps}")
        return int(hit[0]) + 1

    def pack_count(self, eps: float) -> int:
        """Size of the prefix whose points are pairwise more than 2 eps apart."""
        return _pack_from(self, eps)


def _sup_dist(values: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.max(np.abs(values - v[None, :]), axis=1)


def farthest_first(values: np.ndarray, stop_radius: float = 0.0, max_centers: int | None = None) -> FarthestFirst:
    """Traverse until the covering radius drops to ``stop_radius`` (or all points are centers).

    Distances to a new center are only evaluated for points whose current
    center is closer than twice their current radius to it; for the others the
    triangle inequality already rules out an improvement.
    """
    values = np.asarray(values)
    n = len(values)
    centroid = values.mean(axis=0)
    dmin = _sup_dist(values, centroid)
    assign = np.zeros(n, dtype=np.int64)
    cvals = np.empty((n + 1, values.shape[1]), dtype=values.dtype)
    cvals[0] = centroid
    centers, radii = [-1], [float(dmin.max())]
    limit = n + 1 if max_centers is None else max_centers
    while radii[-1] > stop_radius and len(centers) < limit:
        i = int(np.argmax(dmin))
        if dmin[i] <= 0.0:
            break
        k = len(centers)
        v = values[i]
        dc = _sup_dist(cvals[:k], v)
        idx = np.nonzero(dc[assign] < 2.0 * dmin)[0]
        d = _sup_dist(values[idx], v)
        better = d < dmin[idx]
        dmin[idx[better]] = d[better]
        assign[idx[better]] = k
        dmin[i] = 0.0
        cvals[k] = v
        centers.append(i)
        radii.append(float(dmin.max()))
    # exhausted: every point is a center, so the radii list is complete
    exhausted = float(dmin.max()) == 0.0
    return FarthestFirst(np.array(centers), np.array(radii), bool(exhausted))


def greedy_cover(cloud, eps: float) -> tuple[int, np.ndarray]:
    """``(count, centers)`` of a farthest-first eps-net of the cloud (centroid is center -1)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    values = cloud.values if isinstance(cloud, BallCloud) else np.asarray(cloud)
    ff = farthest_first(values, stop_radius=eps)
    k = ff.cover_count(eps)
    return k, ff.centers[:k]


def packing_lower(cloud, eps: float) -> int:
    """Size of a maximal set of cloud points (plus the centroid) more than 2 eps apart.

    A certified lower bound for the covering number at radius eps of any set
    containing the cloud and its centroid.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    values = cloud.values if isinstance(cloud, BallCloud) else np.asarray(cloud)
    ff = farthest_first(values, stop_radius=2.0 * eps)
    return _pack_from(ff, eps)


def _pack_from(ff: FarthestFirst, eps: float) -> int:
    # center k (k >= 1) sits at distance radii[k-1] from every earlier center
    k = 1
    while k < len(ff.radii) and ff.radii[k - 1] > 2.0 * eps:
        k += 1
    return k


# ---------------------------------------------------------------------------
# truncation sandwich


@dataclass(frozen=True)
class CoveringReport:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def violations(self) -> int:
        return sum(1 for v in self.column("bracket_ok") if v == 0)

    def to_csv(self, fh, preamble: str | None = None) -> None:
        if preamble:
            fh.write(preamble.rstrip("\n") + "\n")
        for k in sorted(self.meta):
            fh.write(f"# {k}={_fmt(self.meta[k])}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


REPORT_COLUMNS = (
    "eps", "n_cover_est", "n_pack_lower", "ln_vol_lower", "ln_thm_upper", "ln_thm_lower",
    "valid_upper", "valid_lower", "bracket_ok", "seed", "lambda", "cloud_size",
    "lambda_small", "delta_small", "n_cover_small", "n_cover_small_shift", "n_pack_small",
)


def volumetric_lower(kernel: TruncatedKernel, lam: float, eps: float) -> float:
    """Complex-determinant volumetric bound for ``Q_{A_lam}``, ln scale (may be negative = vacuous)."""
    terms, D = [], 0
    for lab in kernel.labels:
        if lab.weight > lam * (1.0 + _RTOL):
            continue
        ev = np.linalg.eigvalsh(kernel.symbol[lab])
        if ev[0] <= 0:
            return -math.inf
        terms.append(0.5 * lab.dim * float(np.sum(np.log(ev))))
        D += lab.dim ** 2
    return math.fsum(terms) - D * math.log(eps)


def bracket_covering(kernel: TruncatedKernel, lambda_small: float, lambda_large: float,
                     eps_grid: Sequence[float], grid: QuadratureGrid, cloud_size: int = 4096,
                     seed: int = 0, slack: float = 1.0, params: BoundParameters | None = None) -> CoveringReport:
    """Check ``N(eps, small) <= N(eps, large) <= N(eps - delta_small, small) * slack`` on clouds.

    The large cloud is the zero-padded small cloud plus ``cloud_size`` fresh
    samples of the large operator, so the small image set is literally a
    subset. Radii ``eps <= delta_small`` are flagged undefined (bracket_ok = -1).
    """
    if not lambda_small < lambda_large <= kernel.lambda_max * (1.0 + _RTOL):
        raise ValueError("need lambda_small < lambda_large <= Lambda")
    eps = np.asarray(sorted(float(e) for e in eps_grid), dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    op_s = build_truncated_operator(kernel, lambda_small, grid)
    op_l = build_truncated_operator(kernel, lambda_large, grid)
    ss = np.random.SeedSequence(seed)
    s_small, s_large = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    small = sample_ball_image(op_s, cloud_size, s_small)
    fresh = sample_ball_image(op_l, cloud_size, s_large)
    pad = np.zeros((len(small), op_l.complex_dim), dtype=complex)
    pad[:, :op_s.complex_dim] = small.coeffs
    large_vals = np.concatenate([op_l.apply(pad), fresh.values], axis=0)

    delta = tail_delta(kernel.symbol, lambda_small)
    shifted = eps - delta
    need_small = min([e for e in eps] + [e for e in shifted if e > 0])
    ff_small = farthest_first(small.values, stop_radius=need_small)
    ff_large = farthest_first(large_vals, stop_radius=float(eps[0]))

    rows = []
    for e, es in zip(eps, shifted):
        n_l = ff_large.cover_count(e)
        n_s = ff_small.cover_count(e)
        defined = es > 0
        n_ss = ff_small.cover_count(es) if defined else -1
        if not defined:
            ok = -1
        else:
            ok = int(n_s <= n_l <= n_ss * slack)
        up = upper_bound(params, e) if params is not None else None
        lo = lower_bound(params, e) if params is not None else None
        rows.append((
            float(e), n_l, _pack_from(ff_large, e), volumetric_lower(kernel, lambda_large, e),
            math.nan if up is None else up, math.nan if lo is None else lo,
            int(up is not None), int(lo is not None), ok, int(seed), float(lambda_large), int(cloud_size),
            float(lambda_small), delta, n_s, n_ss, _pack_from(ff_small, e),
        ))
    tax = 2.0 * operator_lipschitz(op_l) * grid.fill_radius
    meta = {
        "grid_resolution": grid.resolution,
        "lipschitz_tax": tax,
        "normQ_A_large": operator_norms(kernel, lambda_large).normQ_A,
        "normQ": math.sqrt(trace_norm(kernel.symbol).partial),
        "slack": float(slack),
        "cloud_max_sup_large": float(np.max(np.abs(large_vals))) if large_vals.size else 0.0,
    }
    return CoveringReport(REPORT_COLUMNS, tuple(rows), meta)


# ---------------------------------------------------------------------------
# exact covering in one or two real dimensions


class OracleResult(NamedTuple):
    """Certified bracket ``lower <= N <= upper`` for the minimal eps-cover count."""

    lower: int
    upper: int
    spacing: float

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> int:
        if not self.exact:
            raise ValueError(f"oracle bracket not closed: [{self.lower}, {self.upper}]")
        return self.lower


def _set_cover(points: np.ndarray, cands: np.ndarray, radius: float, time_limit: float) -> tuple[int, int]:
    """Bounds ``(lower, upper)`` on the fewest candidate-centered discs covering all points.

    The ILP runs under a time limit; its dual bound and incumbent are both
    valid, so an unfinished solve still yields a certified bracket.
    """
    big = 10 ** 9
    if radius <= 0:
        return big, big
    hits = spatial.cKDTree(cands).query_ball_point(points, radius)
    if any(len(h) == 0 for h in hits):
        return big, big
    rows = np.repeat(np.arange(len(points)), [len(h) for h in hits])
    cols = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
    used, cols = np.unique(cols, return_inverse=True)
    a = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(points), len(used)))
    m = a.shape[1]
    res = optimize.milp(
        c=np.ones(m), integrality=np.ones(m),
        bounds=optimize.Bounds(0, 1),
        constraints=optimize.LinearConstraint(a, lb=np.ones(a.shape[0]), ub=np.inf),
        options={"time_limit": time_limit},
    )
    upper = int(round(res.fun)) if res.x is not None else big
    dual = getattr(res, "mip_dual_bound", None)
    if res.status == 0:
        lower = upper
    elif dual is not None and np.isfinite(dual):
        lower = max(1, int(math.ceil(dual - 1e-6)))
    else:
        lower = 1
    return lower, upper


def _ellipse_points(s1: float, s2: float, spacing: float) -> np.ndarray:
    xs = np.arange(-math.floor(s1 / spacing), math.floor(s1 / spacing) + 1) * spacing
    ys = np.arange(-math.floor(s2 / spacing), math.floor(s2 / spacing) + 1) * spacing if s2 > 0 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if s2 > 0:
        pts = pts[(pts[:, 0] / s1) ** 2 + (pts[:, 1] / s2) ** 2 <= 1.0]
    # boundary samples, arc spacing <= spacing (perimeter < 2 pi s1)
    m = max(8, int(math.ceil(2.0 * math.pi * s1 / spacing)))
    t = 2.0 * np.pi * np.arange(m) / m
    bd = np.stack([s1 * np.cos(t), s2 * np.sin(t)], axis=1)
    return np.concatenate([pts, bd], axis=0)


def brute_cover_oracle(matrix: np.ndarray, eps: float, max_refine: int = 1, time_limit: float = 10.0,
                       spacing: float | None = None) -> OracleResult:
    """Minimal number of Euclidean eps-balls covering the image of the unit ball under ``matrix``.

    ``matrix`` is real with at most two columns (the image is a segment or an
    ellipse). A segment of half-length h needs exactly ``ceil(h / eps)`` balls
    in any norm. For an ellipse the count is bracketed by two set-cover ILPs on
    a lattice of spacing s: with ``rho = s (1/sqrt(2) + 1/2)`` (every point of
    the ellipse is within rho of the sample set, every center within s/sqrt(2)
    of a lattice candidate), covering the samples with radius ``eps + rho``
    needs at most N discs and a cover of the samples with radius ``eps - rho``
    is a true cover. The spacing (default ``eps / 5``) is halved until the
    bracket closes or ``max_refine`` refinements are spent.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.ndim != 2 or m.shape[1] > 2:
        raise ValueError("brute-force oracle handles at most 2 real dimensions")
    if not eps > 0:
        raise ValueError("eps must be positive")
    sv = np.linalg.svd(m, compute_uv=False)
    s1 = float(sv[0]) if len(sv) else 0.0
    s2 = float(sv[1]) if len(sv) > 1 else 0.0
    if m.shape[1] == 1 or s2 <= 1e-15 * max(s1, 1.0):
        k = max(1, math.ceil(s1 / eps - 1e-12))
        return OracleResult(k, k, 0.0)
    if eps >= s1:
        return OracleResult(1, 1, 0.0)
    spacing = eps / 5.0 if spacing is None else float(spacing)
    if not 0 < spacing < eps:
        raise ValueError("spacing must lie in (0, eps)")
    lo = hi = None
    for _ in range(max_refine + 1):
        rho = spacing * (1.0 / math.sqrt(2.0) + 0.5)
        pts = _ellipse_points(s1, s2, spacing)
        reach = eps + rho + spacing
        cx = np.arange(-math.ceil((s1 + reach) / spacing), math.ceil((s1 + reach) / spacing) + 1) * spacing
        cy = np.arange(-math.ceil((s2 + reach) / spacing), math.ceil((s2 + reach) / spacing) + 1) * spacing
        gx, gy = np.meshgrid(cx, cy, indexing="ij")
        cands = np.stack([gx.ravel(), gy.ravel()], axis=1)
        l_new, _ = _set_cover(pts, cands, eps + rho, time_limit)
        _, u_new = _set_cover(pts, cands, eps - rho, time_limit)
        lo = l_new if lo is None else max(lo, l_new)
        hi = u_new if hi is None else min(hi, u_new)
        if lo >= hi:
            break
        spacing /= 2.0
    return OracleResult(int(lo), int(hi), spacing)

"""Unitary duals, irreducible representations and Haar integration for T^1, T^2 and SU(2).

Points are plain numpy arrays. On the tori a point is a vector of angles of
length n (a batch is an ``(N, n)`` array). On SU(2) a point is a 2x2 unitary
with unit determinant (a batch is ``(N, 2, 2)``).

SU(2) conventions
-----------------
Labels carry the twice-spin ``m = 2l`` so half-integer spins stay exact.
The Laplace eigenvalue is the Casimir ``l(l+1)``. Euler angles follow z-y-z:

    U(alpha, beta, gamma) = Rz(alpha) Ry(beta) Rz(gamma),
    Rz(phi) = diag(exp(-i phi/2), exp(i phi/2)),
    Ry(beta) = [[cos(beta/2), -sin(beta/2)], [sin(beta/2), cos(beta/2)]],

and ``D^l_{ij}(alpha, beta, gamma) = exp(-i mu_i alpha) d^l_{ij}(beta) exp(-i mu_j gamma)``
with rows and columns ordered ``mu = l, l-1, ..., -l``. With this ordering the
spin-1/2 representation is the defining representation.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Group",
    "IrrepLabel",
    "QuadratureGrid",
    "ResolutionError",
    "enumerate_dual",
    "dual_arrays",
    "evaluate_irrep",
    "irrep_values",
    "haar_grid",
    "sample_haar",
    "verify_orthogonality",
    "identity",
    "multiply",
    "inverse",
    "distance",
    "su2_from_euler",
    "su2_to_euler",
    "wigner_small_d",
    "wigner_small_d_factorial",
    "point_coordinates",
]

# relative slack when testing <xi> <= lambda, so that e.g. lambda = sqrt(2) keeps |k| = 1
_WEIGHT_RTOL = 1e-13


class ResolutionError(ValueError):
    """A quadrature grid is too coarse for the requested labels."""


class Group(enum.Enum):
    TORUS1 = "Torus1"
    TORUS2 = "Torus2"
    SU2 = "SU2"

    @property
    def dim(self) -> int:
        return {"Torus1": 1, "Torus2": 2, "SU2": 3}[self.value]

    @property
    def is_torus(self) -> bool:
        return self is not Group.SU2

    @classmethod
    def parse(cls, name: str) -> "Group":
        aliases = {
            "torus1": cls.TORUS1, "t1": cls.TORUS1,
            "torus2": cls.TORUS2, "t2": cls.TORUS2,
            "su2": cls.SU2, "su(2)": cls.SU2,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown group {name!r}; expected Torus1, Torus2 or SU2") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class IrrepLabel:
    """One class [xi] of the unitary dual.

    ``index`` is the integer k on T^1, the pair (k1, k2) on T^2 and the
    twice-spin m on SU(2).
    """

    group: Group
    index: int | tuple[int, int]
    dim: int
    eigenvalue: float

    @property
    def weight_sq(self) -> float:
        # exact: eigenvalues are integers or quarter-integers
        return 1.0 + self.eigenvalue

    @property
    def weight(self) -> float:
        return math.sqrt(self.weight_sq)

    @property
    def sort_key(self) -> tuple:
        idx = self.index if isinstance(self.index, tuple) else (self.index,)
        return (self.weight_sq, idx)

    def __str__(self) -> str:
        if self.group is Group.SU2:
            return f"m={self.index}"
        if isinstance(self.index, tuple):
            return f"k=({self.index[0]},{self.index[1]})"
        return f"k={self.index}"


def make_label(group: Group, index) -> IrrepLabel:
    """Build the label for ``index`` in the dual of ``group``."""
    if group is Group.TORUS1:
        k = int(np.asarray(index).reshape(-1)[0]) if not isinstance(index, int) else index
        return IrrepLabel(group, k, 1, float(k * k))
    if group is Group.TORUS2:
        k1, k2 = (int(v) for v in index)
        return IrrepLabel(group, (k1, k2), 1, float(k1 * k1 + k2 * k2))
    m = int(index)
    if m < 0:
        raise ValueError("SU(2) twice-spin must be nonnegative")
    return IrrepLabel(group, m, m + 1, m * (m + 2) / 4.0)


def _check_lambda(lambda_max: float) -> float:
    lam = float(lambda_max)
    if not lam > 1.0:
        raise ValueError(f"lambda must exceed 1 (the family A_lambda lives on (1, inf)), got {lambda_max}")
    return lam


def _eigen_cap(lam: float) -> float:
    return lam * lam * (1.0 + _WEIGHT_RTOL) - 1.0


def dual_arrays(group: Group, lambda_max: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized dual enumeration: (indices, dims, eigenvalues), sorted like :func:`enumerate_dual`.

    Indices are an ``(L,)`` int array on T^1 and SU(2), ``(L, 2)`` on T^2.
    """
    lam = _check_lambda(lambda_max)
    cap = _eigen_cap(lam)
    if group is Group.TORUS1:
        kmax = int(math.floor(math.sqrt(max(cap, 0.0))))
        k = np.arange(-kmax, kmax + 1)
        ev = (k * k).astype(float)
        order = np.lexsort((k, ev))
        return k[order], np.ones(len(k), dtype=int), ev[order]
    if group is Group.TORUS2:
        kmax = int(math.floor(math.sqrt(max(cap, 0.0))))
        r = np.arange(-kmax, kmax + 1)
        k1, k2 = np.meshgrid(r, r, indexing="ij")
        k1, k2 = k1.ravel(), k2.ravel()
        ev = (k1 * k1 + k2 * k2).astype(float)
        keep = ev <= cap
        k1, k2, ev = k1[keep], k2[keep], ev[keep]
        order = np.lexsort((k2, k1, ev))
        return np.stack([k1[order], k2[order]], axis=1), np.ones(len(order), dtype=int), ev[order]
    # m(m+2)/4 <= cap  <=>  (m+1)^2 <= 4 cap + 1
    mmax = int(math.floor(math.sqrt(4.0 * cap + 1.0) - 1.0 + 1e-12))
    m = np.arange(0, mmax + 1)
    ev = m * (m + 2) / 4.0
    keep = ev <= cap
    return m[keep], m[keep] + 1, ev[keep]


def enumerate_dual(group: Group, lambda_max: float) -> list[IrrepLabel]:
    """All labels with ``<xi> <= lambda_max``, sorted by weight then index."""
    idx, dims, ev = dual_arrays(group, lambda_max)
    if group is Group.TORUS2:
        return [IrrepLabel(group, (int(a), int(b)), 1, float(e)) for (a, b), e in zip(idx, ev)]
    return [IrrepLabel(group, int(i), int(d), float(e)) for i, d, e in zip(idx, dims, ev)]


# ---------------------------------------------------------------------------
# group law


def identity(group: Group) -> np.ndarray:
    if group is Group.SU2:
        return np.eye(2, dtype=complex)
    return np.zeros(group.dim)


def _batch(group: Group, x) -> tuple[np.ndarray, bool]:
    """Return points as a batch and whether the input was a single point."""
    if group is Group.SU2:
        a = np.asarray(x, dtype=complex)
        if a.shape == (2, 2):
            return a[None], True
        if a.ndim == 3 and a.shape[1:] == (2, 2):
            return a, False
        raise ValueError(f"SU(2) points must have shape (2, 2) or (N, 2, 2), got {a.shape}")
    n = group.dim
    a = np.asarray(x, dtype=float)
    if a.ndim == 0 and n == 1:
        return a.reshape(1, 1), True
    if a.ndim == 1 and a.shape[0] == n:
        return a[None], True
    if group is Group.TORUS1 and a.ndim == 1:
        return a[:, None], False
    if a.ndim == 2 and a.shape[1] == n:
        return a, False
    raise ValueError(f"{group} points must have trailing dimension {n}, got shape {a.shape}")


def _unbatch(arr: np.ndarray, single: bool) -> np.ndarray:
    return arr[0] if single else arr


def multiply(group: Group, x, y) -> np.ndarray:
    xb, sx = _batch(group, x)
    yb, sy = _batch(group, y)
    if group is Group.SU2:
        out = xb @ yb
    else:
        out = np.mod(xb + yb, 2.0 * np.pi)
    return _unbatch(out, sx and sy)


def inverse(group: Group, x) -> np.ndarray:
    xb, s = _batch(group, x)
    if group is Group.SU2:
        out = np.conj(np.swapaxes(xb, -1, -2))
    else:
        out = np.mod(-xb, 2.0 * np.pi)
    return _unbatch(out, s)


def distance(group: Group, x, y) -> np.ndarray:
    """Bi-invariant distance.

    Tori: Euclidean norm of the wrapped angle difference. SU(2): the rotation
    angle theta in [0, 2pi] of ``x^{-1} y`` (so that -I is at distance 2pi).
    On both, ``||xi(x) - xi(y)||_op <= <xi> * distance(x, y)``.
    """
    xb, sx = _batch(group, x)
    yb, sy = _batch(group, y)
    if group is Group.SU2:
        tr = np.einsum("...ji,...ji->...", np.conj(xb), yb)
        c = np.clip(tr.real / 2.0, -1.0, 1.0)
        out = 2.0 * np.arccos(c)
    else:
        d = np.mod(yb - xb + np.pi, 2.0 * np.pi) - np.pi
        out = np.sqrt(np.sum(d * d, axis=-1))
    return out[0] if (sx and sy) else out


def su2_from_euler(alpha, beta, gamma) -> np.ndarray:
    """z-y-z Euler angles to SU(2) matrices (broadcasts)."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, gamma)))
    c, s = np.cos(beta / 2.0), np.sin(beta / 2.0)
    ep = np.exp(-0.5j * (alpha + gamma))
    em = np.exp(-0.5j * (alpha - gamma))
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ep * c
    out[..., 0, 1] = -em * s
    out[..., 1, 0] = np.conj(em) * s
    out[..., 1, 1] = np.conj(ep) * c
    return out


def su2_to_euler(u) -> np.ndarray:
    """SU(2) matrices to Euler angles in [0, 2pi) x [0, pi] x [0, 4pi); shape (..., 3)."""
    u = np.asarray(u, dtype=complex)
    a, c = u[..., 0, 0], u[..., 1, 0]
    beta = 2.0 * np.arctan2(np.abs(c), np.abs(a))
    half_sum = np.where(np.abs(a) > 0, -np.angle(a), 0.0)   # (alpha + gamma) / 2
    half_diff = np.where(np.abs(c) > 0, np.angle(c), 0.0)   # (alpha - gamma) / 2
    alpha = half_sum + half_diff
    gamma = half_sum - half_diff
    # (alpha + 2pi, gamma + 2pi) is the same group element
    shift = np.floor(alpha / (2.0 * np.pi))
    alpha = alpha - 2.0 * np.pi * shift
    gamma = np.mod(gamma - 2.0 * np.pi * shift, 4.0 * np.pi)
    return np.stack([alpha, beta, gamma], axis=-1)


def point_coordinates(group: Group, points) -> tuple[list[str], np.ndarray]:
    """Column names and real coordinates used when exporting sampled functions."""
    pb, _ = _batch(group, points)
    if group is Group.SU2:
        return ["alpha", "beta", "gamma"], su2_to_euler(pb)
    names = ["x1"] if group is Group.TORUS1 else ["x1", "x2"]
    return names, np.mod(pb, 2.0 * np.pi)


# ---------------------------------------------------------------------------
# Wigner d-matrices


@functools.lru_cache(maxsize=256)
def _jy_eigensystem(m: int) -> tuple[np.ndarray, np.ndarray]:
    j = m / 2.0
    mu = j - np.arange(m + 1)
    jp = np.zeros((m + 1, m + 1))
    for i in range(1, m + 1):
        jp[i - 1, i] = math.sqrt(j * (j + 1.0) - mu[i] * (mu[i] + 1.0))
    jy = (jp - jp.T) / 2j
    w, v = np.linalg.eigh(jy)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def wigner_small_d(m: int, beta) -> np.ndarray:
    """Wigner small-d matrix ``d^{m/2}(beta) = exp(-i beta J_y)``.

    Computed from the spectral decomposition of J_y, which stays accurate to
    ~1e-13 for large spins where the alternating factorial sum loses digits.
    Returns shape ``beta.shape + (m+1, m+1)``.
    """
    beta = np.asarray(beta, dtype=float)
    w, v = _jy_eigensystem(int(m))
    phase = np.exp(-1j * beta[..., None] * w)
    d = np.einsum("ik,...k,jk->...ij", v, phase, np.conj(v))
    return d.real


def wigner_small_d_factorial(m: int, beta: float) -> np.ndarray:
    """Reference d-matrix from the explicit factorial sum (log-factorials)."""
    j2 = int(m)
    c, s = math.cos(beta / 2.0), math.sin(beta / 2.0)
    out = np.zeros((j2 + 1, j2 + 1))
    lf = [math.lgamma(i + 1.0) for i in range(2 * j2 + 2)]
    for a in range(j2 + 1):
        mp2 = j2 - 2 * a           # 2 * m'
        for b in range(j2 + 1):
            mm2 = j2 - 2 * b       # 2 * m
            jpmp, jmmp = (j2 + mp2) // 2, (j2 - mp2) // 2
            jpm, jmm = (j2 + mm2) // 2, (j2 - mm2) // 2
            dm = (mp2 - mm2) // 2  # m' - m
            pref = 0.5 * (lf[jpmp] + lf[jmmp] + lf[jpm] + lf[jmm])
            total = 0.0
            for k in range(max(0, -dm), min(jpm, jmmp) + 1):
                pc = j2 - dm - 2 * k
                ps = dm + 2 * k
                if (c == 0.0 and pc > 0) or (s == 0.0 and ps > 0):
                    continue
                logmag = pref - (lf[jpm - k] + lf[k] + lf[dm + k] + lf[jmmp - k])
                term = math.exp(logmag)
                if pc:
                    term *= c ** pc
                if ps:
                    term *= s ** ps
                total += -term if (dm + k) % 2 else term
            out[a, b] = total
    return out


# ---------------------------------------------------------------------------
# representations


def _su2_parts(pb: np.ndarray):
    """Per-point (beta, u, v) with D_{ij} = u^(mu_i+mu_j) v^(mu_i-mu_j) d_ij(beta)."""
    a, c = pb[:, 0, 0], pb[:, 1, 0]
    ra, rc = np.abs(a), np.abs(c)
    beta = 2.0 * np.arctan2(rc, ra)
    u = np.where(ra > 0, a / np.where(ra > 0, ra, 1.0), 1.0)
    v = np.where(rc > 0, np.conj(c) / np.where(rc > 0, rc, 1.0), 1.0)
    return beta, u, v


def _su2_rep(m: int, beta, u, v) -> np.ndarray:
    d = wigner_small_d(m, beta)
    i = np.arange(m + 1)
    # 2 mu_i = m - 2i
    psum = (m - i[:, None] - i[None, :])            # mu_i + mu_j
    pdiff = (i[None, :] - i[:, None])               # mu_i - mu_j
    phase = u[:, None, None] ** psum * v[:, None, None] ** pdiff
    return phase * d


def _check_label(group: Group, label: IrrepLabel) -> None:
    if label.group is not group:
        raise ValueError(f"label {label} belongs to {label.group}, not {group}")


def evaluate_irrep(group: Group, label: IrrepLabel, x) -> np.ndarray:
    """Unitary matrix ``xi(x)`` of size d_xi (or a batch ``(N, d, d)``)."""
    _check_label(group, label)
    pb, single = _batch(group, x)
    if group is Group.SU2:
        beta, u, v = _su2_parts(pb)
        out = _su2_rep(label.index, beta, u, v)
    else:
        k = np.atleast_1d(np.asarray(label.index, dtype=float))
        out = np.exp(1j * (pb @ k))[:, None, None]
    return _unbatch(out, single)


def irrep_values(group: Group, labels, points) -> list[np.ndarray]:
    """Batched ``xi(points)`` for each label; each entry has shape ``(N, d, d)``."""
    pb, _ = _batch(group, points)
    for lab in labels:
        _check_label(group, lab)
    if group is Group.SU2:
        beta, u, v = _su2_parts(pb)
        cache: dict[int, np.ndarray] = {}
        out = []
        for lab in labels:
            if lab.index not in cache:
                cache[lab.index] = _su2_rep(lab.index, beta, u, v)
            out.append(cache[lab.index])
        return out
    ks = np.array([np.atleast_1d(lab.index) for lab in labels], dtype=float).reshape(len(labels), -1)
    phases = np.exp(1j * (pb @ ks.T))
    return [phases[:, i, None, None] for i in range(len(labels))]


# ---------------------------------------------------------------------------
# Haar measure


def sample_haar(group: Group, count: int, seed: int) -> np.ndarray:
    """``count`` Haar-distributed points, deterministic in ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    if group is Group.SU2:
        q = rng.standard_normal((count, 4))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        a = q[:, 0] + 1j * q[:, 3]
        b = q[:, 2] + 1j * q[:, 1]
        out = np.empty((count, 2, 2), dtype=complex)
        out[:, 0, 0] = a
        out[:, 0, 1] = b
        out[:, 1, 0] = -np.conj(b)
        out[:, 1, 1] = np.conj(a)
        return out
    return rng.uniform(0.0, 2.0 * np.pi, size=(count, group.dim))


@dataclass(frozen=True)
class QuadratureGrid:
    """Haar quadrature rule: points with positive weights summing to one.

    ``single_weight_limit``: every matrix coefficient with ``<xi>`` at most this
    value is integrated exactly. ``product_weight_limit``: products
    ``xi_ij * conj(xi'_kl)`` are integrated exactly when both labels are
    within this weight (what Schur orthogonality checks need).
    """

    group: Group
    resolution: int
    points: np.ndarray
    weights: np.ndarray
    single_weight_limit: float
    product_weight_limit: float
    self_test_deviation: float = field(default=0.0, compare=False)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def fill_radius(self) -> float:
        """Largest distance from any group point to the grid (estimated on SU(2))."""
        if self.group.is_torus:
            return math.sqrt(self.group.dim) * math.pi / self.resolution
        return _su2_fill_radius(self.resolution)

    def integrate(self, values) -> complex:
        vals = np.asarray(values)
        return np.tensordot(self.weights, vals, axes=(0, 0))


@functools.lru_cache(maxsize=32)
def _su2_fill_radius(resolution: int) -> float:
    grid = _su2_grid_points(resolution)[0]
    probe = sample_haar(Group.SU2, 2048, seed=resolution)
    best = np.full(len(probe), np.inf)
    for start in range(0, len(grid), 4096):
        g = grid[start:start + 4096]
        tr = np.einsum("pji,gji->pg", np.conj(probe), g)
        dist = 2.0 * np.arccos(np.clip(tr.real / 2.0, -1.0, 1.0))
        best = np.minimum(best, dist.min(axis=1))
    # sampled estimate; inflate modestly since the true maximum can sit between probes
    return float(1.25 * best.max())


def _su2_grid_points(r: int) -> tuple[np.ndarray, np.ndarray]:
    x, wx = np.polynomial.legendre.leggauss(r)
    beta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(r) / r
    pp, pm, bb = np.meshgrid(phi, phi, beta, indexing="ij")
    wts = np.broadcast_to(wx[None, None, :] / (2.0 * r * r), pp.shape)
    c, s = np.cos(bb / 2.0), np.sin(bb / 2.0)
    pts = np.empty(pp.shape + (2, 2), dtype=complex)
    pts[..., 0, 0] = np.exp(-1j * pp) * c
    pts[..., 0, 1] = -np.exp(-1j * pm) * s
    pts[..., 1, 0] = np.exp(1j * pm) * s
    pts[..., 1, 1] = np.exp(1j * pp) * c
    return pts.reshape(-1, 2, 2), np.ascontiguousarray(wts.reshape(-1))


def _su2_weight(m: int) -> float:
    return math.sqrt(1.0 + m * (m + 2) / 4.0)


def haar_grid(group: Group, resolution: int, self_test: bool = True) -> QuadratureGrid:
    """Product quadrature for the normalized Haar measure.

    Tori: ``resolution`` equispaced angles per axis. SU(2): ``resolution``
    equispaced values of each half-angle phase ``(alpha +- gamma)/2`` and
    ``resolution`` Gauss-Legendre nodes in ``cos(beta)``. Exactness is checked
    against Schur orthogonality at construction when ``self_test`` is set.
    """
    r = int(resolution)
    if r < 2:
        raise ValueError("resolution must be >= 2")
    if group is Group.SU2:
        pts, wts = _su2_grid_points(r)
        single = r / 2.0
        product = _su2_weight((r - 1) // 2)
    else:
        ang = 2.0 * np.pi * np.arange(r) / r
        if group is Group.TORUS1:
            pts = ang[:, None]
        else:
            a1, a2 = np.meshgrid(ang, ang, indexing="ij")
            pts = np.stack([a1.ravel(), a2.ravel()], axis=1)
        wts = np.full(len(pts), 1.0 / len(pts))
        single = r / 2.0
        product = r / 2.0
    grid = QuadratureGrid(group, r, pts, wts, single, product)
    if not self_test:
        return grid
    dev = verify_orthogonality(group, _self_test_labels(group, product), grid)
    if dev > 1e-10:
        raise ResolutionError(f"quadrature self-test failed: orthogonality defect {dev:.3e}")
    return QuadratureGrid(group, r, pts, wts, single, product, dev)


def _self_test_labels(group: Group, limit: float) -> list[IrrepLabel]:
    if limit <= 1.0:
        return [make_label(group, (0, 0) if group is Group.TORUS2 else 0)]
    labels = enumerate_dual(group, limit)
    if group is Group.SU2:
        top = labels[-2:] if len(labels) > 2 else labels[1:]
        return [labels[0]] + top
    if len(labels) <= 64:
        return labels
    return labels[:16] + labels[-48:]


def verify_orthogonality(group: Group, labels, grid: QuadratureGrid) -> float:
    """Max deviation of the grid Gram matrix of ``sqrt(d) xi_ij`` from the identity."""
    if grid.group is not group:
        raise ValueError(f"grid is for {grid.group}, not {group}")
    labels = list(labels)
    for lab in labels:
        _check_label(group, lab)
        if lab.weight > grid.product_weight_limit * (1.0 + _WEIGHT_RTOL):
            raise ResolutionError(
                f"label {lab} (weight {lab.weight:.4g}) exceeds the grid's exact product "
                f"limit {grid.product_weight_limit:.4g} at resolution {grid.resolution}"
            )
    vals = irrep_values(group, labels, grid.points)
    cols = [np.sqrt(lab.dim) * v.reshape(len(grid.points), -1) for lab, v in zip(labels, vals)]
    phi = np.concatenate(cols, axis=1)
    gram = (phi * grid.weights[:, None]).T @ np.conj(phi)
    gram -= np.eye(gram.shape[0])
    return float(np.max(np.abs(gram)))

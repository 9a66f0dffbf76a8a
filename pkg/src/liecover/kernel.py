"""Left-invariant kernels from symbols, and the RKHS they generate.

With the positive square root ``H`` of the symbol, a function in the RKHS is

    g(x) = sum_xi d_xi Tr[C(xi) xi(x) H(xi)],     <g, h>_K = sum_xi d_xi Tr[C(xi) B(xi)^*]

and the kernel section ``K_y`` has coefficients ``C_y(xi) = (xi(y) H(xi))^*``.
Everything is truncated to ``A_Lambda``; sums over labels run in the fixed
order of :func:`enumerate_dual` with compensated accumulation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from ._numerics import ksum
from .groups import (
    Group,
    IrrepLabel,
    QuadratureGrid,
    ResolutionError,
    haar_grid,
    irrep_values,
    multiply,
    point_coordinates,
    sample_haar,
)
from .symbols import SymbolField, UncertifiedSymbolError, check_hermitian_psd, sqrt_symbol, trace_norm

__all__ = [
    "TruncatedKernel",
    "RkhsCoefficients",
    "SampledFunction",
    "OperatorNorms",
    "make_kernel",
    "eval_kernel",
    "kernel_matrix",
    "kernel_gram",
    "search_negative_gram",
    "check_invariance",
    "kernel_section",
    "rkhs_eval",
    "rkhs_inner",
    "reproducing_residual",
    "q_apply",
    "operator_norms",
    "kernel_lipschitz",
    "unit_ball_lipschitz",
    "choose_resolution",
    "random_coefficients",
    "zero_coefficients",
    "sqrt_coefficients",
]


@dataclass(frozen=True, eq=False)
class TruncatedKernel:
    """Kernel on ``A_Lambda``; ``sqrt`` is None when the symbol is not certified."""

    symbol: SymbolField
    sqrt: SymbolField | None

    @property
    def group(self) -> Group:
        return self.symbol.group

    @property
    def lambda_max(self) -> float:
        return self.symbol.lambda_max

    @property
    def labels(self) -> tuple[IrrepLabel, ...]:
        return self.symbol.labels

    @property
    def certified(self) -> bool:
        return self.sqrt is not None

    def require_sqrt(self) -> SymbolField:
        if self.sqrt is None:
            raise UncertifiedSymbolError("operation needs a Hermitian PSD symbol; this one failed certification")
        return self.sqrt


def make_kernel(symbol: SymbolField) -> TruncatedKernel:
    """Wrap a symbol; the square root is formed only if the symbol certifies."""
    sq = sqrt_symbol(symbol) if check_hermitian_psd(symbol).certified else None
    return TruncatedKernel(symbol, sq)


# ---------------------------------------------------------------------------
# kernel evaluation


def _as_batch(group: Group, pts) -> tuple[np.ndarray, bool]:
    arr = np.asarray(pts)
    if group is Group.SU2:
        arr = arr.astype(complex)
        single = arr.ndim == 2
        return (arr[None] if single else arr), single
    arr = arr.astype(float)
    if group is Group.TORUS1:
        single = arr.ndim == 0 or (arr.ndim == 1 and arr.shape[0] == 1)
        return arr.reshape(-1, 1), single
    single = arr.ndim == 1
    return arr.reshape(-1, 2), single


def kernel_matrix(kernel: TruncatedKernel, xs, ys) -> np.ndarray:
    """``K[i, j] = K(x_i, y_j) = sum d Tr[xi(x_i) sigma xi(y_j)^*]``."""
    x, _ = _as_batch(kernel.group, xs)
    y, _ = _as_batch(kernel.group, ys)
    labels = kernel.labels
    vx = irrep_values(kernel.group, labels, x)
    vy = irrep_values(kernel.group, labels, y)

    def terms():
        for lab, ax, ay in zip(labels, vx, vy):
            left = ax @ kernel.symbol[lab]
            yield lab.dim * np.einsum("nij,mij->nm", left, np.conj(ay))

    return np.asarray(ksum(terms()), dtype=complex).reshape(len(x), len(y))


def eval_kernel(kernel: TruncatedKernel, x, y) -> complex:
    return complex(kernel_matrix(kernel, x, y)[0, 0])


def kernel_gram(kernel: TruncatedKernel, points) -> tuple[np.ndarray, float]:
    """Gram matrix on the points and the smallest eigenvalue of its Hermitian part."""
    gram = kernel_matrix(kernel, points, points)
    herm = 0.5 * (gram + gram.conj().T)
    return gram, float(np.linalg.eigvalsh(herm)[0])


def search_negative_gram(kernel: TruncatedKernel, size: int, seeds, threshold: float = 1e-8):
    """Look for a point set whose Gram matrix has a clearly negative eigenvalue.

    Returns ``(seed, points, min_eig)`` for the first seed where
    ``min_eig < -threshold * trace``, else None.
    """
    for seed in seeds:
        pts = sample_haar(kernel.group, size, seed)
        gram, lo = kernel_gram(kernel, pts)
        if lo < -threshold * max(abs(np.trace(gram).real), 1.0):
            return seed, pts, lo
    return None


def check_invariance(kernel: TruncatedKernel, pairs, g) -> float:
    """``max |K(g x, g y) - K(x, y)|`` over the pairs."""
    xs = np.stack([np.asarray(p[0]) for p in pairs])
    ys = np.stack([np.asarray(p[1]) for p in pairs])
    base = _pairwise(kernel, xs, ys)
    gx = multiply(kernel.group, g, xs)
    gy = multiply(kernel.group, g, ys)
    moved = _pairwise(kernel, gx, gy)
    return float(np.max(np.abs(moved - base)))


def _pairwise(kernel: TruncatedKernel, xs, ys) -> np.ndarray:
    x, _ = _as_batch(kernel.group, xs)
    y, _ = _as_batch(kernel.group, ys)
    vx = irrep_values(kernel.group, kernel.labels, x)
    vy = irrep_values(kernel.group, kernel.labels, y)
    return np.asarray(ksum(
        lab.dim * np.einsum("nij,nij->n", ax @ kernel.symbol[lab], np.conj(ay))
        for lab, ax, ay in zip(kernel.labels, vx, vy)
    ), dtype=complex)


# ---------------------------------------------------------------------------
# RKHS coefficients


def _hs_norm_sq(labels, blocks) -> float:
    return math.fsum(lab.dim * float(np.sum(np.abs(blocks[lab]) ** 2)) for lab in labels)


@dataclass(frozen=True, eq=False)
class RkhsCoefficients:
    """Coefficient field ``C(xi)`` on a finite set of labels."""

    labels: tuple[IrrepLabel, ...]
    blocks: Mapping[IrrepLabel, np.ndarray]
    norm_sq: float = field(init=False)

    def __post_init__(self):
        for lab in self.labels:
            if self.blocks[lab].shape != (lab.dim, lab.dim):
                raise ValueError(f"block for {lab} has shape {self.blocks[lab].shape}")
        object.__setattr__(self, "norm_sq", _hs_norm_sq(self.labels, self.blocks))

    @property
    def norm(self) -> float:
        """``l^2`` norm ``(sum d ||C||_HS^2)^(1/2)``."""
        return math.sqrt(self.norm_sq)

    def __getitem__(self, label: IrrepLabel) -> np.ndarray:
        return self.blocks[label]

    def combine(self, a: complex, other: "RkhsCoefficients", b: complex) -> "RkhsCoefficients":
        """``a * self + b * other`` on the common support."""
        _same_support(self, other)
        return RkhsCoefficients(self.labels, {lab: a * self[lab] + b * other[lab] for lab in self.labels})

    def scale(self, a: complex) -> "RkhsCoefficients":
        return RkhsCoefficients(self.labels, {lab: a * self[lab] for lab in self.labels})


def _same_support(c: RkhsCoefficients, b: RkhsCoefficients) -> None:
    if c.labels != b.labels:
        raise ValueError("coefficient fields have different supports")


def _check_support(c: RkhsCoefficients, kernel: TruncatedKernel) -> None:
    if c.labels != kernel.labels:
        raise ValueError("coefficient support does not match the kernel's A_Lambda")


def zero_coefficients(kernel: TruncatedKernel) -> RkhsCoefficients:
    return RkhsCoefficients(kernel.labels, {lab: np.zeros((lab.dim, lab.dim), complex) for lab in kernel.labels})


def sqrt_coefficients(kernel: TruncatedKernel) -> RkhsCoefficients:
    """``C = H``: the field attaining ``||Q||`` at the identity."""
    h = kernel.require_sqrt()
    return RkhsCoefficients(kernel.labels, {lab: np.array(h[lab]) for lab in kernel.labels})


def random_coefficients(kernel: TruncatedKernel, seed: int, unit: bool = False) -> RkhsCoefficients:
    """Complex Gaussian blocks, optionally normalized to ``l^2`` norm one."""
    rng = np.random.default_rng(seed)
    blocks = {}
    for lab in kernel.labels:
        d = lab.dim
        blocks[lab] = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    c = RkhsCoefficients(kernel.labels, blocks)
    return c.scale(1.0 / c.norm) if unit and c.norm > 0 else c


def kernel_section(kernel: TruncatedKernel, y) -> RkhsCoefficients:
    """Coefficients ``C_y(xi) = (xi(y) H(xi))^*`` of ``K_y = K(., y)``."""
    h = kernel.require_sqrt()
    yb, _ = _as_batch(kernel.group, y)
    vals = irrep_values(kernel.group, kernel.labels, yb[:1])
    return RkhsCoefficients(kernel.labels, {
        lab: (v[0] @ h[lab]).conj().T for lab, v in zip(kernel.labels, vals)
    })


def rkhs_eval(c: RkhsCoefficients, kernel: TruncatedKernel, x):
    """``g(x) = sum d Tr[C(xi) xi(x) H(xi)]``; scalar for one point, array for a batch."""
    _check_support(c, kernel)
    h = kernel.require_sqrt()
    xb, single = _as_batch(kernel.group, x)
    vals = irrep_values(kernel.group, kernel.labels, xb)
    out = np.asarray(ksum(
        lab.dim * np.einsum("ij,nji->n", c[lab], v @ h[lab]) for lab, v in zip(kernel.labels, vals)
    ), dtype=complex).reshape(len(xb))
    return complex(out[0]) if single else out


def rkhs_inner(c: RkhsCoefficients, b: RkhsCoefficients) -> complex:
    """``<C, B> = sum d Tr[C B^*]``, linear in C and conjugate-linear in B."""
    _same_support(c, b)
    return complex(ksum(lab.dim * np.vdot(b[lab], c[lab]) for lab in c.labels))


def reproducing_residual(c: RkhsCoefficients, kernel: TruncatedKernel, y) -> float:
    """``|<g, K_y>_K - g(y)|``, both sides by direct summation."""
    inner = rkhs_inner(c, kernel_section(kernel, y))
    return abs(inner - rkhs_eval(c, kernel, y))


# ---------------------------------------------------------------------------
# the operator Q and its norms


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: QuadratureGrid
    values: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def to_csv(self, path_or_file) -> None:
        """Columns: group coordinates, real part, imaginary part."""
        names, coords = point_coordinates(self.grid.group, self.grid.points)
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(names) + ["re", "im"])
            for row, z in zip(coords, self.values):
                w.writerow([repr(float(v)) for v in row] + [repr(float(z.real)), repr(float(z.imag))])
        finally:
            if own:
                fh.close()


def q_apply(c: RkhsCoefficients, kernel: TruncatedKernel, grid: QuadratureGrid) -> SampledFunction:
    """Samples of ``Q C = sum d Tr[C xi(.) H]`` on the grid."""
    if grid.group is not kernel.group:
        raise ValueError(f"grid is for {grid.group}, kernel for {kernel.group}")
    if kernel.lambda_max > grid.single_weight_limit * (1.0 + 1e-13):
        raise ResolutionError(
            f"grid resolution {grid.resolution} resolves weights up to {grid.single_weight_limit:.4g}, "
            f"kernel needs {kernel.lambda_max:.4g}")
    return SampledFunction(grid, np.asarray(rkhs_eval(c, kernel, grid.points)).reshape(-1))


class OperatorNorms(NamedTuple):
    normQ: float
    normQ_A: float
    normQ_Acomp: float


def operator_norms(kernel: TruncatedKernel, lam: float) -> OperatorNorms:
    """``||Q||``, ``||Q_{A_lam}||``, ``||Q_{A_lam^c}||`` as square roots of trace sums.

    ``||Q||`` uses ``A_Lambda`` only; the complement adds the analytic tail
    beyond Lambda when the symbol family provides one.
    """
    if not 1.0 < lam <= kernel.lambda_max * (1.0 + 1e-13):
        raise ValueError(f"lambda must satisfy 1 < lambda <= Lambda = {kernel.lambda_max}, got {lam}")
    head, rest = [], []
    for lab in kernel.labels:
        t = lab.dim * float(np.trace(kernel.symbol[lab]).real)
        (head if lab.weight <= lam * (1.0 + 1e-13) else rest).append(t)
    tail = trace_norm(kernel.symbol).tail_bound or 0.0
    total = math.fsum(head + rest)
    return OperatorNorms(math.sqrt(max(total, 0.0)), math.sqrt(max(math.fsum(head), 0.0)),
                         math.sqrt(max(math.fsum(rest) + tail, 0.0)))


def kernel_lipschitz(kernel: TruncatedKernel) -> float:
    """``L = sum d <xi> ||sigma(xi)||_S1``: bound for ``|K(x,y) - K(x',y)| / dist(x,x')``."""
    return math.fsum(lab.dim * lab.weight * float(np.linalg.norm(kernel.symbol[lab], "nuc"))
                     for lab in kernel.labels)


def unit_ball_lipschitz(kernel: TruncatedKernel, lam: float | None = None) -> float:
    """Lipschitz constant shared by all ``Q C`` with ``||C|| <= 1``: ``(sum d <xi>^2 Tr sigma)^(1/2)``.

    With ``lam`` the sum runs over ``A_lam`` only (the truncation ``Q_{A_lam}``).
    """
    cap = kernel.lambda_max if lam is None else lam
    return math.sqrt(math.fsum(lab.dim * lab.weight ** 2 * float(np.trace(kernel.symbol[lab]).real)
                               for lab in kernel.labels if lab.weight <= cap * (1.0 + 1e-13)))


def choose_resolution(kernel: TruncatedKernel, fraction: float = 0.01, start: int = 8,
                      max_resolution: int | None = None, lam: float | None = None) -> int:
    """Smallest doubling of ``start`` whose grid makes ``L_Q * fill_radius < fraction * ||Q||``.

    The grid must also resolve every label in ``A_Lambda`` (or ``A_lam`` when
    only the truncation to ``lam`` will be sampled).
    """
    if max_resolution is None:
        max_resolution = 64 if kernel.group is Group.SU2 else 1 << 14
    cap = kernel.lambda_max if lam is None else lam
    lq = unit_ball_lipschitz(kernel, cap)
    target = fraction * math.sqrt(max(trace_norm(kernel.symbol).partial, 0.0))
    r = start
    while r <= max_resolution:
        if r / 2.0 >= cap:
            fill = haar_grid(kernel.group, r, self_test=False).fill_radius
            if lq * fill < target:
                return r
        r *= 2
    raise ResolutionError(f"no resolution up to {max_resolution} meets the Lipschitz criterion")

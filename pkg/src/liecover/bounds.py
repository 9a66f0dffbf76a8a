"""Closed-form entropy bounds, their inner 1-D optimizations and the volumetric bound.

Upper bound, for ``0 < eps < sqrt(S1)/sqrt(3)``::

    ln C(eps) <= C_n (4 b kappa S1)^(n/(beta-n)) eps^(-2n/(beta-n)) ln(1 + 4 sqrt(S1)/eps)

Lower bound, for ``0 < eps < a sqrt(S1) exp(-omega mu (1+gamma/n)/c0)``::

    ln C(eps) >= (c0/(omega mu (1+gamma/n)))^(n/gamma) c0/(1+n/gamma) ln(a sqrt(S1)/eps)^(1+n/gamma)

Under the ``display`` convention ``b`` and ``a`` are measured relative to
``S1 = ||T||_S1`` (``Tr sigma <= b S1 d <xi>^-beta`` and
``det(sigma)^(1/d) >= a^2 S1 exp(-2 omega <xi>^gamma)``); under ``raw`` they
are the plain constants of those inequalities without the ``S1`` factor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, asdict
from typing import NamedTuple, Sequence

import numpy as np

from ._numerics import golden_minimize, grid_bracket
from .counting import fit_counting_constants
from .groups import Group, enumerate_dual
from .symbols import (
    SymbolField,
    classify_det_order,
    classify_trace_order,
    trace_norm,
)

__all__ = [
    "BoundParameters",
    "HMinimum",
    "BoundCurve",
    "upper_bound",
    "lower_bound",
    "upper_valid",
    "lower_valid",
    "minimize_H",
    "maximize_G",
    "ln_H",
    "G_value",
    "det_lower_bound",
    "best_det_lower_bound",
    "fit_bound_parameters",
    "bound_curve",
    "OptimizationError",
]

CONVENTIONS = ("display", "raw")


class OptimizationError(RuntimeError):
    """A 1-D search failed; the message carries the bracket that was tried."""


@dataclass(frozen=True)
class BoundParameters:
    """Constants entering both theorems.

    Either regime may be left unset (``None``); the corresponding bound is then
    reported invalid. ``source`` records where the constants came from.
    """

    n: int
    S1: float
    C_n: float | None = None
    beta: float | None = None
    b_T: float | None = None
    kappa: float | None = None
    c0: float | None = None
    gamma: float | None = None
    omega: float | None = None
    a_T: float | None = None
    mu: float | None = None
    convention: str = "display"
    source: str = "given"

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if not self.S1 > 0:
            raise ValueError("S1 must be positive")
        for name in ("C_n", "b_T", "kappa", "c0", "gamma", "omega", "a_T", "mu"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.beta is not None and not self.beta > self.n:
            raise ValueError(f"beta must exceed n = {self.n}, got {self.beta}")

    @property
    def upper_active(self) -> bool:
        return None not in (self.C_n, self.beta, self.b_T, self.kappa)

    @property
    def lower_active(self) -> bool:
        return None not in (self.c0, self.gamma, self.omega, self.a_T, self.mu)

    @property
    def b_kappa(self) -> float:
        """``b kappa`` for the S1-normalized operator."""
        b = self.b_T if self.convention == "display" else self.b_T / self.S1
        return b * self.kappa

    @property
    def a_eff(self) -> float:
        """The constant ``a sqrt(S1)`` in ``ln(a sqrt(S1) / eps)``."""
        return self.a_T * math.sqrt(self.S1) if self.convention == "display" else self.a_T

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# upper bound


def upper_valid(p: BoundParameters, eps: float) -> bool:
    return p.upper_active and 0.0 < eps < math.sqrt(p.S1) / math.sqrt(3.0)


def upper_bound(p: BoundParameters, eps: float) -> float | None:
    """Right-hand side of the upper estimate for ``ln C(eps)``; None outside its range."""
    if not upper_valid(p, eps):
        return None
    e = p.beta - p.n
    return (p.C_n * (4.0 * p.b_kappa * p.S1) ** (p.n / e) * eps ** (-2.0 * p.n / e)
            * math.log1p(4.0 * math.sqrt(p.S1) / eps))


def ln_H(p: BoundParameters, eps_n: float, lam: float) -> float:
    """``ln H_eps(lam)`` at normalized radius ``eps_n = eps / sqrt(S1)``; +inf off its domain."""
    bk = p.b_kappa
    t = bk * lam ** (p.n - p.beta)
    den = eps_n - math.sqrt(t)
    if den <= 0 or t >= 1.0:
        return math.inf
    return p.C_n * lam ** p.n * math.log1p(2.0 * math.sqrt(1.0 - t) / den)


class HMinimum(NamedTuple):
    lambda_star: float
    lnH_star: float
    lambda_eps: float
    lnH_eps: float
    lambda_valid: float


def minimize_H(p: BoundParameters, eps: float, xtol: float = 1e-10) -> HMinimum:
    """Minimize ``ln H_eps`` over ``lam > max(1, lambda_valid)`` and evaluate it at ``lambda_eps``.

    ``eps`` is in the same units as :func:`upper_bound`; internally the radius
    is ``eps / sqrt(S1)`` for the normalized operator.
    """
    if not p.upper_active:
        raise ValueError("upper-bound constants are not set")
    eps_n = eps / math.sqrt(p.S1)
    if not 0.0 < eps_n < 1.0 / math.sqrt(3.0):
        raise ValueError(f"eps/sqrt(S1) = {eps_n:.6g} is outside (0, 1/sqrt(3))")
    e = p.beta - p.n
    lam_valid = (p.b_kappa / eps_n ** 2) ** (1.0 / e)
    lam_eps = (4.0 * p.b_kappa / eps_n ** 2) ** (1.0 / e)
    lo = max(1.0, lam_valid)
    f = lambda u: ln_H(p, eps_n, math.exp(u))
    u0 = math.log(lo) + 1e-12 * max(1.0, abs(math.log(lo)))
    hi = math.log(max(lam_eps, lo) * 1e3)
    us = np.linspace(u0, hi, 600)
    try:
        a, b, c = grid_bracket(f, us)
    except ValueError as exc:
        vals = [f(u) for u in us]
        i = int(np.argmin(vals))
        if i == 0 and lo == 1.0 and math.isfinite(vals[0]):
            # increasing on the whole domain: infimum at the open end lam -> 1+
            return HMinimum(1.0, float(vals[0]), lam_eps, ln_H(p, eps_n, lam_eps), lam_valid)
        raise OptimizationError(
            f"minimize_H bracket failed on lam in [{math.exp(us[0]):.6g}, {math.exp(us[-1]):.6g}]: {exc}") from exc
    u_star, val = golden_minimize(f, a, b, c, xtol=xtol)
    return HMinimum(math.exp(u_star), float(val), lam_eps, ln_H(p, eps_n, lam_eps), lam_valid)


# ---------------------------------------------------------------------------
# lower bound


def lower_valid(p: BoundParameters, eps: float) -> bool:
    if not p.lower_active or not eps > 0:
        return False
    edge = p.a_eff * math.exp(-p.omega * p.mu * (1.0 + p.gamma / p.n) / p.c0)
    return eps < edge


def lower_bound(p: BoundParameters, eps: float) -> float | None:
    """Right-hand side of the lower estimate for ``ln C(eps)``; None outside its range."""
    if not lower_valid(p, eps):
        return None
    n, g = p.n, p.gamma
    L = math.log(p.a_eff / eps)
    return ((p.c0 / (p.omega * p.mu * (1.0 + g / n))) ** (n / g)
            * p.c0 / (1.0 + n / g) * L ** (1.0 + n / g))


def G_value(p: BoundParameters, eps: float, lam: float) -> float:
    L = math.log(p.a_eff / eps)
    return -p.omega * p.mu * lam ** (p.n + p.gamma) + p.c0 * lam ** p.n * L


def maximize_G(p: BoundParameters, eps: float, xtol: float = 1e-12) -> tuple[float, float]:
    """Numerical maximum of ``G_eps`` over ``lam > 1``; returns ``(lambda_star, G_max)``."""
    if not lower_valid(p, eps):
        raise ValueError("eps is outside the lower bound's range")
    f = lambda u: -G_value(p, eps, math.exp(u))
    # stationary point lies where lam^gamma ~ c0 L / (omega mu); bracket generously around it
    L = math.log(p.a_eff / eps)
    guess = (p.c0 * L / (p.omega * p.mu)) ** (1.0 / p.gamma)
    us = np.linspace(1e-12, math.log(max(guess, 2.0)) + 3.0, 800)
    a, b, c = grid_bracket(f, us)
    u, val = golden_minimize(f, a, b, c, xtol=xtol)
    return math.exp(u), -val


# ---------------------------------------------------------------------------
# volumetric bound


def _logdet_pd(m: np.ndarray, where) -> float:
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if ev[0] <= 0:
        raise ValueError(f"symbol is not strictly positive definite at {where}")
    return float(np.sum(np.log(ev)))


def det_lower_bound(symbol: SymbolField, lam: float, eps: float) -> float:
    """``ln[prod_{<xi> <= lam} det(sigma)^(d/2) / eps^D]`` with ``D = sum d^2``.

    A lower bound for ``ln C(eps)`` whenever it is positive (covering numbers
    are at least 1, so negative values are vacuous).
    """
    if lam > symbol.lambda_max * (1.0 + 1e-13):
        raise ValueError(f"lambda {lam} exceeds Lambda {symbol.lambda_max}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    terms, D = [], 0
    for lab in symbol.labels:
        if lab.weight > lam * (1.0 + 1e-13):
            continue
        terms.append(0.5 * lab.dim * _logdet_pd(symbol[lab], lab))
        D += lab.dim ** 2
    return math.fsum(terms) - D * math.log(eps)


def best_det_lower_bound(symbol: SymbolField, eps: float) -> tuple[float, float]:
    """Largest volumetric bound over the cut-offs ``lam`` available in ``A_Lambda``."""
    best, best_lam = -math.inf, float("nan")
    acc, D = [], 0
    weights = sorted({lab.weight for lab in symbol.labels})
    by_w: dict[float, list] = {}
    for lab in symbol.labels:
        by_w.setdefault(lab.weight, []).append(lab)
    for w in weights:
        for lab in by_w[w]:
            acc.append(0.5 * lab.dim * _logdet_pd(symbol[lab], lab))
            D += lab.dim ** 2
        val = math.fsum(acc) - D * math.log(eps)
        if val > best:
            best, best_lam = val, w
    return best, best_lam


# ---------------------------------------------------------------------------
# constants from a symbol


def _trace_witness(symbol: SymbolField, beta: float) -> float:
    """Smallest b with ``Tr sigma <= b d <xi>^-beta`` on the support (and beyond for analytic profiles)."""
    vals = [math.log(max(np.trace(symbol[lab]).real, 1e-300) / lab.dim) + beta * math.log(lab.weight)
            for lab in symbol.labels if np.trace(symbol[lab]).real > 0]
    f = symbol.profile
    if f is not None and symbol.family != "zero":
        # the inequality must hold for every label, not only those in A_Lambda
        far = enumerate_dual(symbol.group, 4.0 * symbol.lambda_max)
        ws = np.array(sorted({lab.weight for lab in far if lab.weight > symbol.lambda_max}))
        fw = f(ws)
        pos = fw > 0
        vals += list(np.log(fw[pos]) + beta * np.log(ws[pos]))
    if not vals:
        return 0.0
    m = max(vals)
    return math.exp(m) if m < 709 else math.inf


def fit_bound_parameters(symbol: SymbolField, lambda_fit: float | None = None, beta: float | None = None,
                         gamma: float | None = None, convention: str = "display") -> BoundParameters:
    """Witnessing constants for both theorems, extracted from a symbol.

    ``beta``/``gamma`` fix the orders; otherwise they are fitted. A regime whose
    fit is unusable (beta <= n, degenerate determinant fit, non-finite
    constants) is left inactive.
    """
    group = symbol.group
    n = group.dim
    tn = trace_norm(symbol)
    S1 = tn.partial + (tn.tail_bound or 0.0)
    lam_fit = lambda_fit if lambda_fit is not None else max(symbol.lambda_max, 16.0)
    notes = []

    b_T = kappa = None
    if beta is None:
        try:
            beta = classify_trace_order(symbol).beta
            notes.append("beta fitted")
        except ValueError:
            beta = None
    if beta is not None and (not beta > n or not math.isfinite(beta)):
        beta = None
    if beta is not None:
        b_hat = _trace_witness(symbol, beta)
        if 0 < b_hat < math.inf:
            b_T = b_hat / S1 if convention == "display" else b_hat
        else:
            beta = None

    omega = a_T = None
    if gamma is None:
        try:
            fit = classify_det_order(symbol)
            if not fit.degenerate and 0 < fit.a < math.inf:
                gamma, omega, a_hat = fit.gamma, fit.omega, fit.a
                notes.append("gamma fitted")
        except ValueError:
            pass
    else:
        try:
            omega, a_hat = _det_constants(symbol, gamma)
        except ValueError:
            gamma = None
    if gamma is not None and omega is not None and omega > 0 and 0 < a_hat < math.inf:
        a_T = a_hat / math.sqrt(S1) if convention == "display" else a_hat
    else:
        gamma = omega = None

    cc = fit_counting_constants(group, lam_fit, beta=beta, gamma=gamma)
    source = f"fitted on (1, {lam_fit:g}]" + ("; " + ", ".join(notes) if notes else "")
    return BoundParameters(
        n=n, S1=S1, C_n=cc.C_n, beta=beta, b_T=b_T, kappa=cc.kappa if beta is not None else None,
        c0=cc.c0, gamma=gamma, omega=omega, a_T=a_T, mu=cc.mu if gamma is not None else None,
        convention=convention, source=source)


def _det_constants(symbol: SymbolField, gamma: float) -> tuple[float, float]:
    """omega by least squares at fixed gamma, then the witnessing a."""
    w, y = [], []
    for lab in symbol.labels:
        w.append(lab.weight)
        y.append(_logdet_pd(symbol[lab], lab) / lab.dim)
    w, y = np.array(w), np.array(y)
    design = np.stack([np.ones_like(w), w ** gamma], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    omega = -coef[1] / 2.0
    m = 0.5 * float(np.min(y + 2.0 * omega * w ** gamma))
    return float(omega), (math.exp(m) if m < 709 else math.inf)


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class BoundCurve:
    params: BoundParameters
    eps: np.ndarray
    ln_upper: np.ndarray
    ln_lower: np.ndarray
    ln_det_lower: np.ndarray
    det_lambda: np.ndarray
    valid_upper: np.ndarray
    valid_lower: np.ndarray
    notes: tuple[str, ...] = field(default=())

    def to_csv(self, fh, preamble: str | None = None) -> None:
        if preamble:
            fh.write(preamble.rstrip("\n") + "\n")
        fh.write("# constants: " + " ".join(f"{k}={v!r}" for k, v in self.params.as_dict().items()) + "\n")
        for note in self.notes:
            fh.write(f"# warning: {note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "ln_upper", "ln_lower", "ln_det_lower", "det_lambda", "valid_upper", "valid_lower"])
        for row in zip(self.eps, self.ln_upper, self.ln_lower, self.ln_det_lower, self.det_lambda,
                       self.valid_upper, self.valid_lower):
            w.writerow([repr(float(v)) for v in row[:5]] + [int(row[5]), int(row[6])])


def bound_curve(params: BoundParameters, eps_grid: Sequence[float], symbol: SymbolField | None = None) -> BoundCurve:
    eps = np.asarray(eps_grid, dtype=float)
    up, lo, det, dl = [], [], [], []
    for e in eps:
        u, l = upper_bound(params, e), lower_bound(params, e)
        up.append(math.nan if u is None else u)
        lo.append(math.nan if l is None else l)
        if symbol is not None:
            try:
                v, lam = best_det_lower_bound(symbol, e)
            except ValueError:
                v, lam = math.nan, math.nan
        else:
            v, lam = math.nan, math.nan
        det.append(v)
        dl.append(lam)
    vu = ~np.isnan(up)
    vl = ~np.isnan(lo)
    notes = ()
    if not vu.any() and not vl.any():
        notes = ("no eps in the grid is inside either bound's validity range",)
    return BoundCurve(params, eps, np.array(up), np.array(lo), np.array(det), np.array(dl), vu, vl, notes)

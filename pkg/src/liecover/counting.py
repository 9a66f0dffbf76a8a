"""Weighted counting sums over the dual and the constants derived from them.

The basic quantity is ``sum_{<xi> <= lam} d_xi^2 <xi>^(alpha n)`` (head) or the
same sum over ``<xi> > lam`` (tail). Heads grow like ``lam^((alpha+1) n)``;
tails for ``alpha < -1`` decay like ``lam^((alpha+1) n)``.
"""

from __future__ import annotations

import csv
import math
from typing import NamedTuple, Sequence

import numpy as np

from .groups import Group, dual_arrays, enumerate_dual
from .symbols import SymbolField, _integral_remainder, trace_norm

__all__ = [
    "CountingRecord",
    "CountingConstants",
    "weighted_count",
    "counting_record",
    "fit_weyl_exponent",
    "rank_bound",
    "tail_delta",
    "counting_band",
    "fit_counting_constants",
    "TAIL_REMAINDER_RTOL",
]

TAIL_REMAINDER_RTOL = 0.01
_RTOL = 1e-13


def _weights(group: Group, lam: float) -> tuple[np.ndarray, np.ndarray]:
    _, dims, ev = dual_arrays(group, lam)
    return np.sqrt(1.0 + ev), dims.astype(float)


def weighted_count(group: Group, lam: float, alpha: float, side: str = "head",
                   lambda_max: float | None = None) -> float:
    """``sum d^2 <xi>^(alpha n)`` over ``<xi> <= lam`` (head) or ``<xi> > lam`` (tail).

    Tails are summed exactly up to ``lambda_max`` and completed with an
    integral-comparison bound; a ``ValueError`` is raised when that remainder
    is more than 1% of the total.
    """
    n = group.dim
    if side == "head":
        if not alpha > -1:
            raise ValueError("head sums are defined for alpha > -1")
        if lam < 1.0:
            return 0.0
        w, d = _weights(group, lam)
        return math.fsum((d ** 2 * w ** (alpha * n)).tolist())
    if side == "tail":
        if not alpha < -1:
            raise ValueError("tail sums converge only for alpha < -1")
        adaptive = lambda_max is None
        lambda_max = max(8.0 * lam, lam + 32.0) if adaptive else float(lambda_max)
        if lambda_max <= lam:
            raise ValueError("lambda_max must exceed lambda for a tail sum")
        while True:
            exact, remainder = _tail_parts(group, lam, alpha * n, lambda_max)
            total = exact + remainder
            if total <= 0 or remainder <= TAIL_REMAINDER_RTOL * total:
                return total
            if not adaptive or lambda_max > 64.0 * max(lam, 8.0):
                raise ValueError(
                    f"lambda_max = {lambda_max:g} leaves an analytic remainder of {remainder / total:.2%}; "
                    "increase it")
            lambda_max *= 2.0
    raise ValueError(f"side must be 'head' or 'tail', got {side!r}")


def _tail_parts(group: Group, lam: float, power: float, lambda_max: float) -> tuple[float, float]:
    idx, dims, ev = dual_arrays(group, lambda_max)
    w = np.sqrt(1.0 + ev)
    sel = w > lam * (1.0 + _RTOL)
    exact = math.fsum((dims[sel].astype(float) ** 2 * w[sel] ** power).tolist())
    remainder = _integral_remainder(group, lambda v: np.asarray(v, float) ** power, idx, ev)
    return exact, remainder


def rank_bound(group: Group, lam: float) -> int:
    """``sum_{<xi> <= lam} d^2``: dimension of ``l^2(A_lam)``."""
    _, dims, _ = dual_arrays(group, lam)
    return int(np.sum(dims.astype(np.int64) ** 2))


def fit_weyl_exponent(group: Group, alpha: float, lambda_grid: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and prefactor of ``log head(lam)`` against ``log lam``.

    The window must satisfy ``max/min >= 8`` (one octave cubed), so that
    lattice irregularities average out.
    """
    lams = np.asarray(sorted(set(float(v) for v in lambda_grid)))
    if len(lams) < 3 or lams[0] <= 1.0 or lams[-1] / lams[0] < 8.0:
        raise ValueError("degenerate grid: need >= 3 distinct values > 1 spanning a ratio of at least 8")
    heads = np.array([weighted_count(group, v, alpha, "head") for v in lams])
    slope, intercept = np.polyfit(np.log(lams), np.log(heads), 1)
    return float(slope), float(math.exp(intercept))


def counting_band(group: Group, alpha: float, lambda_grid: Sequence[float]) -> tuple[float, float]:
    """Extremes of ``head(lam) / lam^((alpha+1) n)`` over the grid: the empirical band [c, C]."""
    p = (alpha + 1.0) * group.dim
    ratios = [weighted_count(group, v, alpha, "head") / v ** p for v in lambda_grid]
    return float(min(ratios)), float(max(ratios))


class CountingRecord(NamedTuple):
    group: Group
    alpha: float
    lambdas: np.ndarray
    head: np.ndarray
    complement: np.ndarray

    def ratio(self) -> np.ndarray:
        return self.head / self.lambdas ** ((self.alpha + 1.0) * self.group.dim)

    def to_csv(self, fh, preamble: str | None = None) -> None:
        if preamble:
            fh.write(preamble.rstrip("\n") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "head", "complement", "ratio"])
        for row in zip(self.lambdas, self.head, self.complement, self.ratio()):
            w.writerow([repr(float(v)) for v in row])


def counting_record(group: Group, alpha: float, lambdas: Sequence[float], lambda_max: float) -> CountingRecord:
    """Head sums and their complements within ``A_Lambda`` over a lambda grid.

    The complement is the finite sum over ``lam < <xi> <= Lambda`` (no analytic
    tail), so head + complement equals the total over ``A_Lambda``.
    """
    lams = np.asarray(lambdas, dtype=float)
    w, d = _weights(group, lambda_max)
    terms = d ** 2 * w ** (alpha * group.dim)
    head, comp = [], []
    for lam in lams:
        inside = w <= lam * (1.0 + _RTOL)
        head.append(math.fsum(terms[inside].tolist()))
        comp.append(math.fsum(terms[~inside].tolist()))
    return CountingRecord(group, float(alpha), lams, np.array(head), np.array(comp))


def tail_delta(symbol: SymbolField, lam: float) -> float:
    """``delta_lam = (sum_{<xi> > lam} d Tr sigma)^(1/2)``, analytic tail beyond Lambda included."""
    if lam > symbol.lambda_max * (1.0 + _RTOL):
        raise ValueError(f"lambda {lam} exceeds the symbol's Lambda {symbol.lambda_max}")
    terms = [lab.dim * float(np.trace(symbol[lab]).real) for lab in symbol.labels
             if lab.weight > lam * (1.0 + _RTOL)]
    tail = trace_norm(symbol).tail_bound or 0.0
    return math.sqrt(max(math.fsum(terms) + tail, 0.0))


# ---------------------------------------------------------------------------
# witnessing constants


class CountingConstants(NamedTuple):
    """Witnessing constants over ``lam in (1, lambda_fit]``.

    ``C_n``: rank <= C_n lam^n. ``c0``: rank >= c0 lam^n.
    ``mu``: sum d^2 <xi>^gamma <= mu lam^(n+gamma) (None without gamma).
    ``kappa``: sum_{<xi> > lam} d^2 <xi>^-beta <= kappa lam^(n-beta) (None without beta).
    """

    C_n: float
    c0: float
    mu: float | None
    kappa: float | None
    lambda_fit: float


def _tails_at_left_limits(group: Group, jumps: np.ndarray, power: float) -> np.ndarray:
    """``sum_{<xi> >= j} d^2 <xi>^power`` for every j, from one enumeration and suffix sums."""
    top = float(jumps[-1])
    far = max(8.0 * top, top + 32.0)
    while True:
        idx, dims, ev = dual_arrays(group, far)
        w = np.sqrt(1.0 + ev)
        order = np.argsort(w, kind="stable")
        ws = w[order]
        terms = dims[order].astype(float) ** 2 * ws ** power
        suffix = np.cumsum(terms[::-1])[::-1]
        remainder = _integral_remainder(group, lambda v: np.asarray(v, float) ** power, idx, ev)
        start = np.searchsorted(ws, jumps * (1.0 - 1e-12), side="left")
        tails = suffix[start] + remainder
        if remainder <= TAIL_REMAINDER_RTOL * tails[-1]:
            return tails
        if far > 64.0 * max(top, 8.0):
            raise ValueError(f"tail remainder beyond {far:g} stays above {TAIL_REMAINDER_RTOL:.0%}")
        far *= 2.0


def fit_counting_constants(group: Group, lambda_fit: float, beta: float | None = None,
                           gamma: float | None = None) -> CountingConstants:
    """Exact extremes of the counting ratios over ``(1, lambda_fit]``.

    Head sums are right-continuous step functions of lam, so the supremum of
    ``head / lam^p`` sits at a jump (a label weight) and the infimum at a left
    limit just below one. Tails ``lam^(beta-n) * tail(lam)`` increase between
    jumps, so their supremum is also a left limit.
    """
    n = group.dim
    labels = enumerate_dual(group, lambda_fit)
    w_all = np.array([lab.weight for lab in labels])
    d_all = np.array([lab.dim for lab in labels], dtype=float)
    jumps = np.unique(w_all[w_all > 1.0])
    ends = np.append(jumps, lambda_fit) if lambda_fit > jumps[-1] * (1 + _RTOL) else jumps
    d2 = d_all ** 2

    def head_at(lam, strict=False):
        sel = w_all < lam * (1 - _RTOL) if strict else w_all <= lam * (1 + _RTOL)
        return math.fsum(d2[sel].tolist()), sel

    # lam -> 1+ keeps only the trivial label, ratio 1
    C_n = max([1.0] + [head_at(j)[0] / j ** n for j in ends])
    c0 = min(head_at(j, strict=True)[0] / j ** n for j in jumps)
    c0 = min(c0, head_at(lambda_fit)[0] / lambda_fit ** n)
    mu = None
    if gamma is not None:
        g_terms = d2 * w_all ** gamma
        mu = float(max([1.0] + [math.fsum(g_terms[head_at(j)[1]].tolist()) / j ** (n + gamma) for j in ends]))
    kappa = None
    if beta is not None:
        if not beta > n:
            raise ValueError("kappa needs beta > n")
        tails = _tails_at_left_limits(group, jumps, -beta)
        kappa = float(np.max(tails * jumps ** (beta - n)))
    return CountingConstants(float(C_n), float(c0), mu, kappa, float(lambda_fit))

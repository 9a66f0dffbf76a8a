"""Compensated summation and 1-D optimizers shared across modules."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def ksum(terms: Iterable[np.ndarray | complex | float]):
    """Neumaier-compensated sum of arrays (or scalars), elementwise.

    Used wherever a series over labels is summed, so results do not depend on
    the order in which labels are visited beyond ~1e-16 relative.
    """
    total = None
    comp = None
    for t in terms:
        t = np.asarray(t)
        if total is None:
            total = np.array(t, dtype=np.result_type(t, float), copy=True)
            comp = np.zeros_like(total)
            continue
        s = total + t
        big = np.abs(total) >= np.abs(t)
        comp = comp + np.where(big, (total - s) + t, (t - s) + total)
        total = s
    if total is None:
        return 0.0
    out = total + comp
    return out[()] if out.ndim == 0 else out


def fsum_complex(values) -> complex:
    values = np.asarray(values).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))


def golden_minimize(f: Callable[[float], float], a: float, b: float, c: float,
                    xtol: float = 1e-10, maxiter: int = 500) -> tuple[float, float]:
    """Golden-section search inside a bracket ``a < b < c`` with ``f(b) <= f(a), f(c)``.

    Returns ``(x, f(x))``; the returned value never exceeds ``f(b)``.
    """
    fb = f(b)
    best_x, best_f = b, fb
    lo, hi = a, c
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if hi - lo <= xtol * max(1.0, abs(lo) + abs(hi)) / 2.0:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    for x, fx in ((x1, f1), (x2, f2)):
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def grid_bracket(f: Callable[[float], float], xs: np.ndarray) -> tuple[float, float, float]:
    """Bracket the minimum of ``f`` sampled on the increasing grid ``xs``.

    Raises ``ValueError`` if the smallest sample sits on the grid edge.
    """
    vals = np.array([f(x) for x in xs])
    if not np.any(np.isfinite(vals)):
        raise ValueError("objective is not finite anywhere on the search grid")
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if i == 0 or i == len(xs) - 1:
        raise ValueError(f"minimum at grid edge x={xs[i]:.6g} (f={vals[i]:.6g})")
    return float(xs[i - 1]), float(xs[i]), float(xs[i + 1])

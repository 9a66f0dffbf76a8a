"""Matrix symbols of left-invariant operators, their certification and square roots.

A symbol assigns a d_xi x d_xi matrix to every label of the truncated dual
``A_Lambda = {<xi> <= Lambda}``. The analytic families are all scalar
multiples of the identity, ``sigma(xi) = f(<xi>) I``, with a decreasing
profile ``f``:

    heat(t)                f(w) = exp(-t (w^2 - 1)) = exp(-t lambda_xi)
    polynomial(beta)       f(w) = w^(-beta)
    subgaussian(omega, g)  f(w) = exp(-2 omega w^g)
    zero                   f(w) = 0

so ``d Tr sigma(xi) = d^2 f(<xi>)`` and series tails can be bounded by
integral comparison. Custom symbols carry explicit matrices and no tail model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy import integrate, optimize

from .groups import Group, IrrepLabel, dual_arrays, enumerate_dual, make_label

__all__ = [
    "SymbolField",
    "SymbolDiagnostics",
    "TraceNorm",
    "TraceOrderFit",
    "DetOrderFit",
    "UncertifiedSymbolError",
    "make_symbol",
    "custom_symbol",
    "check_hermitian_psd",
    "sqrt_symbol",
    "trace_norm",
    "classify_trace_order",
    "classify_det_order",
    "radial_tail",
    "save_symbol",
    "load_symbol",
    "dumps_symbol",
    "loads_symbol",
    "HERMITIAN_TOL",
    "PSD_FLOOR",
]

HERMITIAN_TOL = 1e-12
PSD_FLOOR = -1e-12

FAMILIES: dict[str, tuple[str, ...]] = {
    "heat": ("t",),
    "polynomial": ("beta",),
    "subgaussian": ("omega", "gamma"),
    "zero": (),
    "custom": (),
}


class UncertifiedSymbolError(ValueError):
    """The symbol is not Hermitian positive semidefinite within tolerance."""


def _profile(family: str, params: Mapping[str, float]) -> Callable | None:
    if family == "heat":
        t = params["t"]
        return lambda w: np.exp(-t * (np.asarray(w, float) ** 2 - 1.0))
    if family == "polynomial":
        b = params["beta"]
        return lambda w: np.asarray(w, float) ** (-b)
    if family == "subgaussian":
        om, g = params["omega"], params["gamma"]
        return lambda w: np.exp(-2.0 * om * np.asarray(w, float) ** g)
    if family == "zero":
        return lambda w: np.zeros_like(np.asarray(w, float))
    return None


@dataclass(frozen=True, eq=False)
class SymbolField:
    """Hermitian matrix per label on the truncated dual ``A_Lambda``."""

    group: Group
    lambda_max: float
    labels: tuple[IrrepLabel, ...]
    matrices: Mapping[IrrepLabel, np.ndarray]
    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, label: IrrepLabel) -> np.ndarray:
        return self.matrices[label]

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def profile(self) -> Callable | None:
        """Radial profile f with sigma = f(<xi>) I, or None for custom symbols."""
        return _profile(self.family, self.params)

    def with_matrices(self, matrices: Mapping[IrrepLabel, np.ndarray], family: str | None = None) -> "SymbolField":
        return SymbolField(self.group, self.lambda_max, self.labels, dict(matrices),
                           family or self.family, dict(self.params))


class SymbolDiagnostics(NamedTuple):
    min_eigenvalue: float
    max_op_norm: float
    partial_trace_norm: float
    tail_bound: float | None
    hermiticity_defect: float

    @property
    def certified(self) -> bool:
        return self.hermiticity_defect <= HERMITIAN_TOL and self.min_eigenvalue >= PSD_FLOOR


class TraceNorm(NamedTuple):
    partial: float
    tail_bound: float | None

    @property
    def upper(self) -> float:
        return self.partial + (self.tail_bound if self.tail_bound is not None else math.inf)


class TraceOrderFit(NamedTuple):
    beta: float
    b: float


class DetOrderFit(NamedTuple):
    gamma: float
    omega: float
    a: float
    degenerate: bool


def make_symbol(group: Group, family: str, lambda_max: float, **params) -> SymbolField:
    """Build a symbol from one of the analytic families (or ``custom``).

    ``make_symbol(g, "heat", 4.0, t=1.0)``; ``custom`` forwards to
    :func:`custom_symbol` and takes ``matrices=`` and ``strict=``.
    """
    family = family.lower()
    if family not in FAMILIES:
        raise ValueError(f"unknown symbol family {family!r}")
    if family == "custom":
        return custom_symbol(group, lambda_max, params.pop("matrices"), **params)
    expected = FAMILIES[family]
    if set(params) != set(expected):
        raise ValueError(f"family {family!r} takes parameters {expected}, got {tuple(params)}")
    p = {k: float(v) for k, v in params.items()}
    if family == "heat" and not p["t"] > 0:
        raise ValueError("heat symbol needs t > 0")
    if family == "polynomial" and not p["beta"] > group.dim:
        raise ValueError(
            f"polynomial symbol needs beta > n = {group.dim} for a trace class operator, got beta = {p['beta']}")
    if family == "subgaussian" and not (p["omega"] > 0 and p["gamma"] > 0):
        raise ValueError("subgaussian symbol needs omega > 0 and gamma > 0")
    labels = tuple(enumerate_dual(group, lambda_max))
    f = _profile(family, p)
    mats = {lab: float(f(lab.weight)) * np.eye(lab.dim, dtype=complex) for lab in labels}
    return SymbolField(group, float(lambda_max), labels, mats, family, p)


def custom_symbol(group: Group, lambda_max: float, matrices: Mapping, strict: bool = True) -> SymbolField:
    """Symbol from explicit matrices, one per label of ``A_Lambda``.

    Keys may be labels or bare indices (k, (k1, k2) or twice-spin m). With
    ``strict`` a non-Hermitian matrix is rejected; ``strict=False`` keeps it so
    the certification checks have something to reject.
    """
    labels = tuple(enumerate_dual(group, lambda_max))
    by_label = {}
    for key, mat in matrices.items():
        lab = key if isinstance(key, IrrepLabel) else make_label(group, key)
        by_label[lab] = np.array(mat, dtype=complex).reshape(lab.dim, lab.dim)
    missing = [str(lab) for lab in labels if lab not in by_label]
    extra = [str(lab) for lab in by_label if lab not in set(labels)]
    if missing or extra:
        raise ValueError(f"custom symbol support mismatch: missing {missing[:5]}, outside A_Lambda {extra[:5]}")
    if strict:
        for lab in labels:
            m = by_label[lab]
            defect = float(np.max(np.abs(m - m.conj().T)))
            if defect > HERMITIAN_TOL:
                raise ValueError(f"custom symbol is not Hermitian at {lab} (defect {defect:.3g})")
    return SymbolField(group, float(lambda_max), labels, {lab: by_label[lab] for lab in labels}, "custom", {})


# ---------------------------------------------------------------------------
# tails


def _integral_remainder(group: Group, f: Callable, idx: np.ndarray, ev: np.ndarray) -> float:
    """Upper bound for sum of d^2 f(<xi>) over labels outside the enumerated set."""
    kw = dict(limit=400, epsabs=0.0, epsrel=1e-10)
    if group is Group.TORUS1:
        r = float(np.max(np.abs(idx)))
        val, _ = integrate.quad(lambda x: float(f(math.sqrt(1.0 + x * x))), r, np.inf, **kw)
        return 2.0 * val
    if group is Group.SU2:
        mm = float(np.max(idx)) + 1.0
        val, _ = integrate.quad(
            lambda x: (x + 1.0) ** 2 * float(f(math.sqrt(1.0 + (x - 1.0) * (x + 1.0) / 4.0))), mm, np.inf, **kw)
        return val
    # T^2: unit squares around excluded lattice points lie outside radius r_ex - sqrt(2)/2
    s = math.sqrt(2.0) / 2.0
    r_ex = math.sqrt(float(np.max(ev)) + 1.0)
    fr = lambda r: float(f(math.sqrt(1.0 + max(r - s, 0.0) ** 2)))
    val, _ = integrate.quad(lambda r: 2.0 * math.pi * r * fr(r), r_ex - s, np.inf, **kw)
    return val


def radial_tail(group: Group, f: Callable, lambda_cut: float, window: float = 2.0) -> float:
    """Bound for ``sum_{<xi> > lambda_cut} d_xi^2 f(<xi>)`` with f decreasing.

    Exact summation out to ``max(window*lambda_cut, lambda_cut + 8)``, then an
    integral-comparison bound for the rest.
    """
    lam_far = max(window * lambda_cut, lambda_cut + 8.0)
    idx, dims, ev = dual_arrays(group, lam_far)
    _, _, ev_in = dual_arrays(group, lambda_cut)
    cap = float(ev_in.max())
    mask = ev > cap
    w = np.sqrt(1.0 + ev[mask])
    exact = math.fsum((dims[mask] ** 2 * f(w)).tolist())
    return exact + _integral_remainder(group, f, idx, ev)


# ---------------------------------------------------------------------------
# diagnostics


def _trace_terms(symbol: SymbolField) -> np.ndarray:
    return np.array([lab.dim * np.trace(symbol[lab]).real for lab in symbol.labels])


def trace_norm(symbol: SymbolField) -> TraceNorm:
    """Partial trace norm over the support plus an analytic tail bound (None for custom)."""
    partial = math.fsum(_trace_terms(symbol).tolist())
    f = symbol.profile
    if f is None:
        return TraceNorm(partial, None)
    if symbol.family == "zero":
        return TraceNorm(partial, 0.0)
    return TraceNorm(partial, radial_tail(symbol.group, f, symbol.lambda_max))


def check_hermitian_psd(symbol: SymbolField) -> SymbolDiagnostics:
    min_eig = math.inf
    max_op = 0.0
    defect = 0.0
    for lab in symbol.labels:
        m = symbol[lab]
        defect = max(defect, float(np.max(np.abs(m - m.conj().T))))
        herm = 0.5 * (m + m.conj().T)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(herm)[0]))
        max_op = max(max_op, float(np.linalg.norm(m, 2)))
    tn = trace_norm(symbol)
    return SymbolDiagnostics(min_eig, max_op, tn.partial, tn.tail_bound, defect)


def sqrt_symbol(symbol: SymbolField) -> SymbolField:
    """The positive square root field H with H(xi)^2 = sigma(xi)."""
    diag = check_hermitian_psd(symbol)
    if not diag.certified:
        raise UncertifiedSymbolError(
            f"symbol not Hermitian PSD: defect {diag.hermiticity_defect:.3g}, "
            f"min eigenvalue {diag.min_eigenvalue:.3g}")
    out = {}
    for lab in symbol.labels:
        m = symbol[lab]
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        out[lab] = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return symbol.with_matrices(out, family=f"sqrt({symbol.family})")


# ---------------------------------------------------------------------------
# order fits


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _by_weight(symbol: SymbolField, values: np.ndarray, reduce) -> tuple[np.ndarray, np.ndarray]:
    wsq = np.array([lab.weight_sq for lab in symbol.labels])
    uniq = np.unique(wsq)
    red = np.array([reduce(values[wsq == u]) for u in uniq])
    return np.sqrt(uniq), red


def _upper_half(w: np.ndarray) -> np.ndarray:
    return np.arange(len(w)) >= len(w) // 2


def classify_trace_order(symbol: SymbolField) -> TraceOrderFit:
    """Fit ``Tr sigma(xi) <= b d <xi>^-beta``.

    beta comes from least squares of ``log(Tr sigma / d)`` against ``log <xi>``
    on the largest half of the weight window; b is the smallest constant that
    makes the bound hold on the whole support (a witness, not a sharp value).
    """
    per = np.array([np.trace(symbol[lab]).real / lab.dim for lab in symbol.labels])
    w, y = _by_weight(symbol, per, np.max)
    # entries that underflowed to zero carry no slope information
    keep = y > np.finfo(float).tiny
    w, y = w[keep], y[keep]
    if len(w) < 10:
        raise ValueError(f"need at least 10 distinct weights with Tr sigma > 0 for an order fit, got {len(w)}")
    sel = _upper_half(w)
    slope = np.polyfit(np.log(w[sel]), np.log(y[sel]), 1)[0]
    beta = float(-slope)
    wl = np.array([lab.weight for lab in symbol.labels])
    pos = per > 0
    b = _safe_exp(float(np.max(np.log(per[pos]) + beta * np.log(wl[pos])))) if np.any(pos) else 0.0
    return TraceOrderFit(beta, b)


_GAMMA_MIN, _GAMMA_MAX = 1e-3, 8.0


def _det_rss(gamma: float, w: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    design = np.stack([np.ones_like(w), w ** gamma], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(resid @ resid), float(coef[0]), float(coef[1])


def classify_det_order(symbol: SymbolField) -> DetOrderFit:
    """Fit ``det(sigma)^(1/d) >= a^2 exp(-2 omega <xi>^gamma)``.

    gamma and omega come from a separable least-squares fit on the largest half
    of the weight window; a is the witnessing constant on the whole support.
    ``degenerate`` flags fits that run to gamma -> 0 (no stretched-exponential
    lower bound of this shape is tight, e.g. polynomial symbols).
    """
    logdet = []
    for lab in symbol.labels:
        ev = np.linalg.eigvalsh(0.5 * (symbol[lab] + symbol[lab].conj().T))
        if ev[0] <= 0:
            raise ValueError(f"determinant order undefined: sigma({lab}) is not strictly positive definite")
        logdet.append(float(np.sum(np.log(ev))) / lab.dim)
    logdet = np.array(logdet)
    w, y = _by_weight(symbol, logdet, np.min)
    if len(w) < 10:
        raise ValueError(f"need at least 10 distinct weights for an order fit, got {len(w)}")
    sel = _upper_half(w)
    ws, ys = w[sel], y[sel]
    lg = np.linspace(math.log(_GAMMA_MIN), math.log(_GAMMA_MAX), 161)
    rss = np.array([_det_rss(math.exp(v), ws, ys)[0] for v in lg])
    i = int(np.argmin(rss))
    lo, hi = lg[max(i - 1, 0)], lg[min(i + 1, len(lg) - 1)]
    res = optimize.minimize_scalar(lambda v: _det_rss(math.exp(v), ws, ys)[0], bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    gamma = math.exp(res.x) if res.fun <= rss[i] else math.exp(lg[i])
    _, _, slope = _det_rss(gamma, ws, ys)
    omega = -slope / 2.0
    degenerate = gamma <= _GAMMA_MIN * 1.5 or omega <= 0
    wl = np.array([lab.weight for lab in symbol.labels])
    a = _safe_exp(0.5 * float(np.min(logdet + 2.0 * omega * wl ** gamma)))
    return DetOrderFit(float(gamma), float(omega), a, bool(degenerate))


# ---------------------------------------------------------------------------
# text format
#
#   # liecover symbol v1
#   group = SU2
#   family = heat
#   param.t = 0.5
#   lambda_max = 3.0
#   labels = 5
#   <index> ; <d> ; <re> <im> <re> <im> ...      (row-major, one line per label)
#
# index is "k" on T^1, "k1,k2" on T^2 and the twice-spin "m" on SU(2).

_MAGIC = "# liecover symbol v1"


def _fmt_index(lab: IrrepLabel) -> str:
    return f"{lab.index[0]},{lab.index[1]}" if isinstance(lab.index, tuple) else str(lab.index)


def dumps_symbol(symbol: SymbolField) -> str:
    lines = [_MAGIC, f"group = {symbol.group.value}", f"family = {symbol.family}"]
    lines += [f"param.{k} = {float(v)!r}" for k, v in sorted(symbol.params.items())]
    lines += [f"lambda_max = {symbol.lambda_max!r}", f"labels = {len(symbol.labels)}"]
    for lab in symbol.labels:
        flat = symbol[lab].reshape(-1)
        nums = " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in flat)
        lines.append(f"{_fmt_index(lab)} ; {lab.dim} ; {nums}")
    return "\n".join(lines) + "\n"


def loads_symbol(text: str, strict: bool = True) -> SymbolField:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ValueError("not a liecover symbol file (bad header)")
    header: dict[str, str] = {}
    params: dict[str, float] = {}
    body_start = None
    for i, raw in enumerate(lines[1:], start=2):
        if ";" in raw:
            body_start = i - 1
            break
        if not raw.strip():
            continue
        key, _, val = raw.partition("=")
        key, val = key.strip(), val.strip()
        if key.startswith("param."):
            params[key[6:]] = float(val)
        else:
            header[key] = val
    group = Group.parse(header["group"])
    lam = float(header["lambda_max"])
    family = header["family"]
    count = int(header["labels"])
    mats = {}
    for lineno, raw in enumerate(lines[body_start:] if body_start is not None else [], start=(body_start or 0) + 1):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.split(";")]
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'index ; d ; entries'")
        idx = tuple(int(v) for v in parts[0].split(",")) if "," in parts[0] else int(parts[0])
        lab = make_label(group, idx)
        d = int(parts[1])
        if d != lab.dim:
            raise ValueError(f"line {lineno}: dimension {d} does not match label {lab}")
        nums = np.array([float(v) for v in parts[2].split()])
        if len(nums) != 2 * d * d:
            raise ValueError(f"line {lineno}: expected {2 * d * d} numbers, got {len(nums)}")
        mats[lab] = (nums[0::2] + 1j * nums[1::2]).reshape(d, d)
    if len(mats) != count:
        raise ValueError(f"header announces {count} labels, found {len(mats)}")
    sym = custom_symbol(group, lam, mats, strict=strict)
    return SymbolField(group, lam, sym.labels, sym.matrices, family, params)


def save_symbol(symbol: SymbolField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_symbol(symbol))


def load_symbol(path, strict: bool = True) -> SymbolField:
    with open(path, encoding="utf-8") as fh:
        return loads_symbol(fh.read(), strict=strict)

"""Run configuration: a flat ``key = value`` text format.

Grammar (one statement per line)::

    line    := blank | comment | key '=' value [comment]
    comment := '#' anything
    key     := name ('.' name)*         e.g. symbol.family, cover.cloud_size
    value   := scalar | scalar (',' scalar)+ | 'none'

Keys are the dotted names listed in :data:`KEYS`; unknown and duplicate keys
are errors reported with line and column. Omitted keys take their defaults.
Floats are written with ``repr`` so that serialize/parse round-trips exactly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .groups import Group

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config", "config_hash", "KEYS",
           "stream_seed", "STREAMS"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


FAMILY_PARAMS = {
    "heat": ("t",),
    "polynomial": ("beta",),
    "subgaussian": ("omega", "gamma"),
    "zero": (),
    "custom": (),
}

# per-module random streams split off the single config seed
STREAMS = {"kernel": 1, "cover": 2, "symbol": 3}


def stream_seed(seed: int, stream: str) -> int:
    """Deterministic child seed for a module: SeedSequence(seed, spawn_key=(stream id,))."""
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS[stream],))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class RunConfig:
    group: str = "Torus1"
    lambda_max: float = 12.0
    seed: int = 0
    output_dir: str = "out"
    symbol_family: str = "heat"
    symbol_t: float | None = 1.0
    symbol_beta: float | None = None
    symbol_omega: float | None = None
    symbol_gamma: float | None = None
    symbol_file: str | None = None
    symbol_strict: bool = True
    grid_resolution: int = 0
    kernel_points: int = 20
    sweep_lambdas: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0)
    sweep_alpha: float = 0.0
    eps_grid: tuple[float, ...] = (0.5, 0.4, 0.3)
    eps_scale: str = "normQ"
    cover_cloud_size: int = 4096
    cover_lambda_small: float = 2.0
    cover_lambda_large: float = 4.0
    cover_slack: float = 1.0
    bounds_convention: str = "display"
    bounds_beta: float | None = None
    bounds_gamma: float | None = None
    bounds_lambda_fit: float | None = None

    def __post_init__(self):
        _validate(self)

    @property
    def group_id(self) -> Group:
        return Group.parse(self.group)

    def symbol_params(self) -> dict[str, float]:
        return {p: getattr(self, f"symbol_{p}") for p in FAMILY_PARAMS[self.symbol_family]}

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _field_key(name: str) -> str:
    head, _, rest = name.partition("_")
    if head in ("symbol", "grid", "kernel", "sweep", "eps", "cover", "bounds"):
        return f"{head}.{rest}"
    return name


KEYS: dict[str, dataclasses.Field] = {_field_key(f.name): f for f in dataclasses.fields(RunConfig)}


class _KeyedError(ConfigError):
    """Validation failure tied to a key; parse_config adds the key's position."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _validate(c: RunConfig) -> None:
    def err(key, msg):
        raise _KeyedError(key, msg)

    try:
        g = Group.parse(c.group)
    except ValueError as exc:
        raise _KeyedError("group", str(exc))
    if not c.lambda_max > 1.0:
        err("lambda_max", "lambda_max must be > 1")
    if not 0 <= c.seed < 2 ** 64:
        err("seed", "seed must be an unsigned 64-bit integer")
    fam = c.symbol_family
    if fam not in FAMILY_PARAMS:
        err("symbol.family", f"unknown symbol family {fam!r}; expected one of {sorted(FAMILY_PARAMS)}")
    for p in ("t", "beta", "omega", "gamma"):
        v = getattr(c, f"symbol_{p}")
        if p in FAMILY_PARAMS[fam]:
            if v is None:
                err(f"symbol.{p}", f"family {fam!r} needs symbol.{p}")
        elif v is not None:
            err(f"symbol.{p}", f"symbol.{p} is not a parameter of family {fam!r}")
    if fam == "heat" and not c.symbol_t > 0:
        err("symbol.t", "heat symbol needs t > 0")
    if fam == "polynomial" and not c.symbol_beta > g.dim:
        err("symbol.beta", f"polynomial symbol needs beta > n = {g.dim}, got {c.symbol_beta}")
    if fam == "subgaussian" and not (c.symbol_omega > 0 and c.symbol_gamma > 0):
        err("symbol.omega", "subgaussian symbol needs omega > 0 and gamma > 0")
    if (fam == "custom") != (c.symbol_file is not None):
        err("symbol.file", "symbol.file is required for, and only allowed with, family custom")
    if c.grid_resolution < 0 or c.grid_resolution == 1:
        err("grid.resolution", "grid.resolution must be 0 (automatic) or >= 2")
    if c.kernel_points < 1:
        err("kernel.points", "kernel.points must be >= 1")
    if not c.sweep_lambdas or any(not v > 1.0 for v in c.sweep_lambdas):
        err("sweep.lambdas", "sweep.lambdas must be values > 1")
    if not c.sweep_alpha > -1.0:
        err("sweep.alpha", "sweep.alpha must be > -1")
    if not c.eps_grid or any(not v > 0 for v in c.eps_grid):
        err("eps.grid", "eps.grid must be positive values")
    if c.eps_scale not in ("normQ", "absolute"):
        err("eps.scale", "eps.scale must be 'normQ' or 'absolute'")
    if c.cover_cloud_size < 1:
        err("cover.cloud_size", "cover.cloud_size must be >= 1")
    if not 1.0 < c.cover_lambda_small < c.cover_lambda_large:
        err("cover.lambda_large", "need 1 < cover.lambda_small < cover.lambda_large")
    if not c.cover_slack >= 1.0:
        err("cover.slack", "cover.slack must be >= 1")
    if c.bounds_convention not in ("display", "raw"):
        err("bounds.convention", "bounds.convention must be 'display' or 'raw'")
    if c.bounds_beta is not None and not c.bounds_beta > g.dim:
        err("bounds.beta", f"bounds.beta must exceed n = {g.dim}")
    if c.bounds_gamma is not None and not c.bounds_gamma > 0:
        err("bounds.gamma", "bounds.gamma must be > 0")
    if c.bounds_lambda_fit is not None and not c.bounds_lambda_fit > 1:
        err("bounds.lambda_fit", "bounds.lambda_fit must be > 1")
    for key, v in (("output_dir", c.output_dir), ("symbol.file", c.symbol_file)):
        if v is not None and (not v or "#" in v or "\n" in v or v != v.strip() or v.lower() == "none"):
            err(key, "paths must be non-empty, without '#', newlines or surrounding spaces")


# ---------------------------------------------------------------------------
# scalar codecs


def _kind(f: dataclasses.Field) -> tuple[str, bool]:
    t = str(f.type)
    optional = "None" in t
    for k in ("tuple", "bool", "int", "float", "str"):
        if k in t:
            return k, optional
    raise TypeError(t)


def _parse_scalar(kind: str, text: str) -> Any:
    if kind == "float":
        v = float(text)
        if not math.isfinite(v):
            raise ValueError("non-finite number")
        return v
    if kind == "int":
        return int(text, 10)
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if not text:
        raise ValueError("empty string")
    return text


def _format(kind: str, value: Any) -> str:
    if value is None:
        return "none"
    if kind == "tuple":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "float":
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def serialize_config(config: RunConfig) -> str:
    lines = []
    for key, f in KEYS.items():
        kind, _ = _kind(f)
        lines.append(f"{key} = {_format(kind, getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode("utf-8")).hexdigest()


def parse_config(text: str) -> RunConfig:
    """Strict parse; every error names its line and column."""
    values: dict[str, Any] = {}
    where: dict[str, tuple[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, _, val_part = line.partition("=")
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        vcol = len(key_part) + 2 + (len(val_part) - len(val_part.lstrip()))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, kcol)
        if key in where:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key][0]})", lineno, kcol)
        where[key] = (lineno, kcol)
        f = KEYS[key]
        kind, optional = _kind(f)
        val = val_part.strip()
        try:
            if val.lower() == "none":
                if not optional:
                    raise ValueError("this key does not accept 'none'")
                values[f.name] = None
            elif kind == "tuple":
                items = [v.strip() for v in val.split(",")]
                values[f.name] = tuple(_parse_scalar("float", v) for v in items)
            else:
                values[f.name] = _parse_scalar(kind, val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, vcol) from None
    # a family switch drops the default heat parameter unless it was given explicitly
    fam = values.get("symbol_family", RunConfig.symbol_family)
    if "symbol_t" not in values and "t" not in FAMILY_PARAMS.get(fam, ()):
        values["symbol_t"] = None
    try:
        return RunConfig(**values)
    except _KeyedError as exc:
        # a missing key is reported where the key that requires it was set
        related = {"symbol.file": "symbol.family", "symbol.t": "symbol.family", "symbol.beta": "symbol.family",
                   "symbol.omega": "symbol.family", "symbol.gamma": "symbol.family",
                   "cover.lambda_large": "cover.lambda_small"}
        line, col = where.get(exc.key) or where.get(related.get(exc.key), (None, None))
        raise ConfigError(str(exc), line, col) from None

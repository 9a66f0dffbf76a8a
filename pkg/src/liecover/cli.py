"""Command-line front end.

    liecover <subcommand> [--config PATH] [--out DIR] [--seed N] [--quiet]

Subcommands: dual, symbol, kernel, count, bounds, cover, all.

Exit codes: 0 success, 2 invalid configuration or precondition, 3 numerical
certification failure (symbol not Hermitian PSD, grid too coarse), 64 unknown
subcommand, 74 output directory not writable.

Every CSV starts with ``# config_hash=<sha256> seed=<n>``; ``run.json`` holds
the config echo, package versions, artifact hashes and wall times.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .bounds import bound_curve, fit_bound_parameters
from .config import ConfigError, RunConfig, config_hash, parse_config, serialize_config, stream_seed
from .counting import counting_band, counting_record, fit_weyl_exponent
from .covering import bracket_covering
from .groups import Group, ResolutionError, enumerate_dual, haar_grid, sample_haar
from .kernel import (
    check_invariance,
    choose_resolution,
    kernel_gram,
    kernel_lipschitz,
    kernel_matrix,
    make_kernel,
    random_coefficients,
    reproducing_residual,
)
from .symbols import (
    UncertifiedSymbolError,
    check_hermitian_psd,
    classify_det_order,
    classify_trace_order,
    load_symbol,
    make_symbol,
    trace_norm,
)

SUBCOMMANDS = ("dual", "symbol", "kernel", "count", "bounds", "cover", "all")
EXIT_OK, EXIT_VALIDATION, EXIT_CERTIFICATION, EXIT_USAGE, EXIT_CANTCREAT = 0, 2, 3, 64, 74


class CertificationFailure(Exception):
    """A step ran but its numerical certification failed."""


class Run:
    def __init__(self, config: RunConfig, quiet: bool):
        self.config = config
        self.quiet = quiet
        self.hash = config_hash(config)
        self.artifacts: dict[str, str] = {}
        self.wall: dict[str, float] = {}
        self.failures: list[str] = []
        self._symbol = None
        self._kernel = None

    def say(self, text: str) -> None:
        if not self.quiet:
            print(text)

    @property
    def preamble(self) -> str:
        return f"# config_hash={self.hash} seed={self.config.seed}"

    def table(self, name: str, header: list[str], rows: list[list], comments: list[str] = ()) -> None:
        buf = io.StringIO()
        buf.write(self.preamble + "\n")
        for c in comments:
            buf.write(f"# {c}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        self.artifacts[name] = buf.getvalue()

    def symbol(self):
        if self._symbol is None:
            c = self.config
            if c.symbol_family == "custom":
                sym = load_symbol(c.symbol_file, strict=c.symbol_strict)
                if sym.group is not c.group_id:
                    raise ConfigError(f"symbol file is for {sym.group}, config says {c.group_id}")
                if abs(sym.lambda_max - c.lambda_max) > 1e-12 * c.lambda_max:
                    raise ConfigError(f"symbol file has Lambda {sym.lambda_max}, config says {c.lambda_max}")
            else:
                sym = make_symbol(c.group_id, c.symbol_family, c.lambda_max, **c.symbol_params())
            self._symbol = sym
        return self._symbol

    def kernel(self):
        if self._kernel is None:
            self._kernel = make_kernel(self.symbol())
        return self._kernel

    def eps_values(self) -> np.ndarray:
        eps = np.asarray(self.config.eps_grid, dtype=float)
        if self.config.eps_scale == "normQ":
            eps = eps * math.sqrt(trace_norm(self.symbol()).partial)
        return eps


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _fmt_index(index) -> str:
    return f"{index[0]},{index[1]}" if isinstance(index, tuple) else str(index)


# ---------------------------------------------------------------------------
# steps


def step_dual(run: Run) -> None:
    labels = enumerate_dual(run.config.group_id, run.config.lambda_max)
    rows = [[_fmt_index(l.index), l.dim, l.eigenvalue, l.weight] for l in labels]
    run.table("dual.csv", ["index", "dim", "eigenvalue", "weight"], rows)
    run.say(f"{len(labels)} irreducible representations with <xi> <= {run.config.lambda_max:g}")
    if not run.quiet:
        for r in rows[:50]:
            print(f"  {r[0]:>10}  d={r[1]:<3} lambda={r[2]:<10g} <xi>={r[3]:.6g}")


def step_symbol(run: Run) -> None:
    sym = run.symbol()
    diag = check_hermitian_psd(sym)
    rows = [
        ["family", sym.family], ["lambda_max", sym.lambda_max], ["labels", len(sym.labels)],
        ["min_eigenvalue", diag.min_eigenvalue], ["max_op_norm", diag.max_op_norm],
        ["partial_trace_norm", diag.partial_trace_norm],
        ["tail_bound", "unknown" if diag.tail_bound is None else diag.tail_bound],
        ["hermiticity_defect", diag.hermiticity_defect], ["certified", diag.certified],
    ]
    try:
        tf = classify_trace_order(sym)
        rows += [["trace_order_beta", tf.beta], ["trace_order_b", tf.b]]
    except ValueError as exc:
        rows.append(["trace_order", f"n/a: {exc}"])
    try:
        df = classify_det_order(sym)
        rows += [["det_order_gamma", df.gamma], ["det_order_omega", df.omega], ["det_order_a", df.a],
                 ["det_order_degenerate", df.degenerate]]
    except ValueError as exc:
        rows.append(["det_order", f"n/a: {exc}"])
    run.table("symbol.csv", ["quantity", "value"], rows)
    run.say(f"symbol {sym.family}: partial trace norm {diag.partial_trace_norm:.12g}, certified={diag.certified}")
    if not diag.certified:
        raise CertificationFailure(
            f"symbol is not Hermitian PSD (defect {diag.hermiticity_defect:.3g}, min eig {diag.min_eigenvalue:.3g})")


def step_kernel(run: Run) -> None:
    c = run.config
    k = run.kernel()
    seed = stream_seed(c.seed, "kernel")
    pts = sample_haar(c.group_id, c.kernel_points, seed)
    gram, lo = kernel_gram(k, pts)
    rows = [
        ["points", len(pts)],
        ["gram_min_eigenvalue", lo],
        ["gram_trace", float(np.trace(gram).real)],
        ["gram_hermitian_defect", float(np.max(np.abs(gram - gram.conj().T)))],
        ["diagonal_minus_trace_norm", float(np.max(np.abs(np.diag(gram) - trace_norm(k.symbol).partial)))],
        ["kernel_lipschitz", kernel_lipschitz(k)],
    ]
    others = sample_haar(c.group_id, len(pts), seed + 1)
    g = sample_haar(c.group_id, 1, seed + 2)[0]
    rows.append(["invariance_max_deviation", check_invariance(k, list(zip(pts, others)), g)])
    if k.certified:
        worst = 0.0
        for i, y in enumerate(pts):
            coeff = random_coefficients(k, seed + 100 + i)
            worst = max(worst, reproducing_residual(coeff, k, y) / (1.0 + coeff.norm))
        rows.append(["reproducing_residual_relative", worst])
    run.table("kernel.csv", ["quantity", "value"], rows)
    run.say(f"kernel: Gram min eigenvalue {lo:.3e} on {len(pts)} points")
    if not k.certified:
        raise CertificationFailure("kernel symbol failed certification; RKHS checks skipped")


def step_count(run: Run) -> None:
    c = run.config
    g = c.group_id
    lams = sorted(c.sweep_lambdas)
    rec = counting_record(g, c.sweep_alpha, lams, max(max(lams), c.lambda_max))
    comments = []
    try:
        expo, const = fit_weyl_exponent(g, c.sweep_alpha, lams)
        comments.append(f"weyl_exponent={expo!r} constant={const!r} expected={(c.sweep_alpha + 1) * g.dim!r}")
        run.say(f"count: fitted exponent {expo:.4f} (expected {(c.sweep_alpha + 1) * g.dim:g})")
    except ValueError as exc:
        comments.append(f"weyl_exponent=n/a ({exc})")
        run.say(f"count: no exponent fit ({exc})")
    lo, hi = counting_band(g, c.sweep_alpha, lams)
    comments.append(f"band_low={lo!r} band_high={hi!r}")
    buf = io.StringIO()
    rec.to_csv(buf, preamble=run.preamble + "\n" + "\n".join(f"# {x}" for x in comments))
    run.artifacts["count.csv"] = buf.getvalue()


def step_bounds(run: Run) -> None:
    c = run.config
    sym = run.symbol()
    params = fit_bound_parameters(sym, lambda_fit=c.bounds_lambda_fit, beta=c.bounds_beta,
                                  gamma=c.bounds_gamma, convention=c.bounds_convention)
    curve = bound_curve(params, run.eps_values(), sym)
    buf = io.StringIO()
    curve.to_csv(buf, preamble=run.preamble)
    run.artifacts["bounds.csv"] = buf.getvalue()
    for note in curve.notes:
        print(f"warning: {note}", file=sys.stderr)
    run.say(f"bounds: {int(curve.valid_upper.sum())} valid upper, {int(curve.valid_lower.sum())} valid lower "
            f"of {len(curve.eps)} radii")


def step_cover(run: Run) -> None:
    c = run.config
    if c.cover_lambda_large > c.lambda_max:
        raise ValueError(f"cover.lambda_large = {c.cover_lambda_large:g} exceeds lambda_max = {c.lambda_max:g}")
    k = run.kernel()
    if not k.certified:
        raise CertificationFailure("covering needs a certified (Hermitian PSD) symbol")
    res = c.grid_resolution or choose_resolution(k, lam=c.cover_lambda_large)
    grid = haar_grid(c.group_id, res)
    try:
        params = fit_bound_parameters(run.symbol(), lambda_fit=c.bounds_lambda_fit, beta=c.bounds_beta,
                                      gamma=c.bounds_gamma, convention=c.bounds_convention)
    except ValueError:
        params = None
    rep = bracket_covering(k, c.cover_lambda_small, c.cover_lambda_large, run.eps_values(), grid,
                           cloud_size=c.cover_cloud_size, seed=stream_seed(c.seed, "cover"),
                           slack=c.cover_slack, params=params)
    buf = io.StringIO()
    rep.to_csv(buf, preamble=run.preamble)
    run.artifacts["cover.csv"] = buf.getvalue()
    run.say(f"cover: {len(rep.rows)} radii, {rep.violations()} bracket violations, grid resolution {res}")


STEPS: dict[str, Callable[[Run], None]] = {
    "dual": step_dual, "symbol": step_symbol, "kernel": step_kernel, "count": step_count,
    "bounds": step_bounds, "cover": step_cover,
}


# ---------------------------------------------------------------------------
# driver


def _write(out_dir: str, run: Run, subcommand: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    hashes = {}
    for name, text in sorted(run.artifacts.items()):
        data = text.encode("utf-8")
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    manifest = {
        "subcommand": subcommand,
        "config": serialize_config(run.config),
        "config_hash": run.hash,
        "seed": run.config.seed,
        "versions": {"liecover": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "artifacts": hashes,
        "wall_times": run.wall,
        "failures": run.failures,
    }
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liecover", description="Covering-number laboratory for RKHS on compact Lie groups.")
    p.add_argument("subcommand", help="one of: " + ", ".join(SUBCOMMANDS))
    p.add_argument("--config", help="path to a key = value config file (defaults when omitted)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="seed (overrides the config)")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.subcommand not in SUBCOMMANDS:
        print(f"liecover: unknown subcommand {args.subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        config = parse_config(text)
        if args.seed is not None:
            config = config.replace(seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"liecover: config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = args.out or config.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".liecover-write-test")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        print(f"liecover: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CANTCREAT

    run = Run(config, args.quiet)
    names = list(STEPS) if args.subcommand == "all" else [args.subcommand]
    code = EXIT_OK
    for name in names:
        t0 = time.perf_counter()
        try:
            STEPS[name](run)
        except (CertificationFailure, UncertifiedSymbolError, ResolutionError) as exc:
            print(f"liecover {name}: certification failure: {exc}", file=sys.stderr)
            run.failures.append(f"{name}: {exc}")
            code = max(code, EXIT_CERTIFICATION)
        except ValueError as exc:
            print(f"liecover {name}: invalid input: {exc}", file=sys.stderr)
            run.failures.append(f"{name}: {exc}")
            code = max(code, EXIT_VALIDATION)
        run.wall[name] = time.perf_counter() - t0
        if code == EXIT_VALIDATION:
            break
    try:
        _write(out_dir, run, args.subcommand)
    except OSError as exc:
        print(f"liecover: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CANTCREAT
    return code


if __name__ == "__main__":
    sys.exit(main())

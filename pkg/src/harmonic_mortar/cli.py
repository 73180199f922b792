"""Command-line front end: ``harmonic-mortar {infsup,oracle,solve,convergence}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure in every cell.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .geometry import ROTOR, STATOR, mesh_at_level
from .harmonics import HarmonicSpace
from .infsup import analytic_beta, build_interface_operator, harmonic_order
from .saddle import (InfSupViolation, Manufactured, assemble_system, energy, h1_error,
                     h1_seminorm, observed_rates, sample_field, solve)
from .splines import SplineSpace2D

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

INFSUP_COLUMNS = ["level", "k", "n_interface", "c", "N", "dim_MN", "scope", "beta_discrete",
                  "beta_continuous", "criterion", "stable"]


def _fmt(x, precision: int) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{precision}g")
    return "" if x is None else str(x)


def _write_csv(path, header, rows, precision):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v, precision) for v in row])
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return buf.getvalue()


def _dump_coo(path: str, M):
    M = M.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, v in zip(M.row, M.col, M.data):
            fh.write(f"{i} {j} {float(v)!r}\n")


# -- infsup ------------------------------------------------------------------------

def run_infsup(cfg: RunConfig, threads: int = 1, log=print):
    """Results for every (level, k, c-or-N) cell, in configuration order, plus failures."""
    geom = cfg.geometry
    groups = [(lv, k) for lv in cfg.levels for k in cfg.degrees]

    def group(cell):
        level, k = cell
        out, failed = [], []
        try:
            op = build_interface_operator(geom, level, k, cfg.scope, **cfg.mesh_kwargs())
        except (np.linalg.LinAlgError, ArithmeticError, FloatingPointError) as exc:
            return out, [(level, k, None, str(exc))]
        orders = ([(None, n) for n in cfg.N] if cfg.N is not None
                  else [(c, harmonic_order(c, op.n_interface)) for c in cfg.c])
        for c, N in orders:
            try:
                out.append(op.infsup(N, level=level, degree=k, c=c))
            except (np.linalg.LinAlgError, ArithmeticError, FloatingPointError, ValueError) as exc:
                failed.append((level, k, c, str(exc)))
        return out, failed

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(group, groups))
    else:
        parts = [group(g) for g in groups]
    results = [r for p in parts for r in p[0]]
    failures = [f for p in parts for f in p[1]]
    return results, failures


def format_grid(results, precision: int = 6) -> str:
    """Table layout: one row per scaling ``c`` (or ``N``), one column per level/degree."""
    cols = sorted({(r.level, r.degree) for r in results})
    by_level = len({k for _, k in cols}) == 1
    heads = [f"l={lv}" if by_level else f"l={lv},k={k}" for lv, k in cols]
    keys = []
    for r in results:
        key = ("c", r.c) if r.c is not None else ("N", r.N)
        if key not in keys:
            keys.append(key)
    lines = ["c \\ " + " | ".join(heads)]
    for kind, val in keys:
        label = _fraction_label(val) if kind == "c" else f"N={val}"
        cells = []
        for lv, k in cols:
            hit = [r for r in results if r.level == lv and r.degree == k
                   and (r.c if kind == "c" else r.N) == val]
            cells.append(_fmt(hit[0].beta_discrete, precision) if hit else "-")
        lines.append(f"{label} | " + " | ".join(cells))
    return "\n".join(lines)


def _fraction_label(c: float) -> str:
    f = Fraction(c).limit_denominator(64)
    return str(f) if abs(float(f) - c) < 1e-12 else f"{c:g}"


def cmd_infsup(cfg: RunConfig, out=None, threads: int = 1, log=print) -> int:
    results, failures = run_infsup(cfg, threads)
    rows = [[r.row()[c] for c in INFSUP_COLUMNS] for r in results]
    text = _write_csv(out or cfg.csv, INFSUP_COLUMNS, rows, cfg.precision)
    log(text.rstrip("\n"))
    if results:
        log("")
        log(format_grid(results, cfg.precision))
        spans = sorted({(r.level, r.n_r) for r in results})
        log("radial spans (stator): " + ", ".join(f"l={lv}: {nr}" for lv, nr in spans)
            + "; the radial resolution is not prescribed by the method and beta' depends on it"
            " in the trailing digits")
    for level, k, c, msg in failures:
        log(f"cell level={level} k={k} c={c}: failed: {msg}")
    if failures and not results:
        return EXIT_NUMERICAL
    return 0


# -- oracle ------------------------------------------------------------------------

def cmd_oracle(cfg: RunConfig, n_max: int = 10, log=print) -> int:
    ab = analytic_beta(cfg.geometry, n_max)
    best = ab.argmin
    log("mode,beta")
    for n, b in zip(ab.modes, ab.beta):
        log(f"{n},{_fmt(b, cfg.precision)}" + (",min" if n == best else ""))
    log(f"min beta = {_fmt(ab.min, cfg.precision)} at mode {best}")
    return 0


# -- solve -------------------------------------------------------------------------

def _spaces(cfg: RunConfig, level: int, k: int):
    g = cfg.geometry
    return [SplineSpace2D(mesh_at_level(g, STATOR, cfg.n_theta[STATOR], level, cfg.n_r[STATOR]), k),
            SplineSpace2D(mesh_at_level(g, ROTOR, cfg.n_theta[ROTOR], level, cfg.n_r[ROTOR]), k)]


def _solve_order(cfg: RunConfig, spaces) -> int:
    if cfg.N:
        return cfg.N[0]
    n = min(s.n_interface for s in spaces)
    return harmonic_order(min(cfg.c), n)


def _sources(cfg: RunConfig):
    if cfg.manufactured:
        return Manufactured(cfg.geometry).sources()
    return {ring: cfg.sources[ring].to_source() for ring in (STATOR, ROTOR)}


def cmd_solve(cfg: RunConfig, out=None, dump_matrices: bool = False, log=print) -> int:
    level, k = cfg.levels[0], cfg.degrees[0]
    spaces = _spaces(cfg, level, k)
    N = _solve_order(cfg, spaces)
    system = assemble_system(spaces, HarmonicSpace(N, cfg.r_gamma), _sources(cfg), cfg.alpha[0])
    out = out or cfg.csv
    if dump_matrices:
        stem = os.path.splitext(out)[0] if out else "saddle"
        _dump_coo(stem + "_A.txt", system.field_matrix())
        _dump_coo(stem + "_B.txt", system.coupling_matrix())
    rows = []
    status = 0
    for ia, alpha in enumerate(cfg.alpha):
        try:
            res = solve(system.rotated(alpha))
        except InfSupViolation as exc:
            log(f"alpha={alpha:g}: {exc}")
            status = EXIT_NUMERICAL
            continue
        h1 = h1_seminorm(system, res)
        jm = float(np.max(np.abs(res.jump_moments))) if res.jump_moments.size else 0.0
        log(f"alpha={_fmt(alpha, cfg.precision)} level={level} k={k} N={N} "
            f"dofs={system.dim} energy={_fmt(energy(system, res), cfg.precision)} "
            f"|u|_H1={_fmt(h1, cfg.precision)} max|jump moment|={jm:.3e} "
            f"residual={res.residual:.3e}")
        if cfg.manufactured:
            ms = Manufactured(cfg.geometry)
            err = h1_error(spaces, res, ms.grad)
            lam3 = res.lam[2 * ms.mode - 1] if N >= ms.mode else float("nan")
            log(f"  H1 error={_fmt(err, cfg.precision)} lambda_cos{ms.mode}={_fmt(lam3, cfg.precision)} "
                f"exact={_fmt(ms.multiplier_coefficient(), cfg.precision)}")
        for ring, u in zip((STATOR, ROTOR), res.u):
            rows += [(alpha, ring, i, v) for i, v in enumerate(u)]
        rows += [(alpha, "multiplier", i, v) for i, v in enumerate(res.lam)]
        if out:
            suffix = f"_grid{ia}.csv" if len(cfg.alpha) > 1 else "_grid.csv"
            _write_csv(os.path.splitext(out)[0] + suffix, ["ring", "r", "theta", "u"],
                       sample_field(spaces, res), 12)
    if out:
        _write_csv(out, ["alpha", "block", "index", "value"], rows, 17)
    return status


# -- convergence -------------------------------------------------------------------

def convergence_table(cfg: RunConfig):
    """Rows ``(k, level, h, dofs, H1 error, rate, multiplier error)`` for the manufactured case."""
    ms = Manufactured(cfg.geometry)
    rows = []
    for k in cfg.degrees:
        hs, errs, lam_err, dofs = [], [], [], []
        for level in cfg.levels:
            spaces = _spaces(cfg, level, k)
            N = max(_solve_order(cfg, spaces), ms.mode)
            system = assemble_system(spaces, HarmonicSpace(N, cfg.r_gamma), ms.sources())
            res = solve(system)
            hs.append(spaces[0].mesh.dtheta)
            errs.append(h1_error(spaces, res, ms.grad))
            exact = ms.multiplier_coefficient()
            lam_err.append(abs(res.lam[2 * ms.mode - 1] - exact) / abs(exact))
            dofs.append(system.dim)
        rates = [float("nan")] + list(observed_rates(hs, errs))
        rows += [(k, lv, h, d, e, r, le)
                 for lv, h, d, e, r, le in zip(cfg.levels, hs, dofs, errs, rates, lam_err)]
    return rows


def cmd_convergence(cfg: RunConfig, out=None, log=print) -> int:
    rows = convergence_table(cfg)
    text = _write_csv(out or cfg.csv, ["k", "level", "h", "dofs", "h1_error", "rate", "lambda_rel_error"],
                      rows, cfg.precision)
    log(text.rstrip("\n"))
    return 0


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmonic-mortar",
                                description="Harmonic mortar coupling of annular stator/rotor rings.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("infsup", "discrete inf-sup sweep over levels, degrees and scalings"),
                        ("oracle", "closed-form per-mode inf-sup constants of the stator annulus"),
                        ("solve", "solve the coupled problem"),
                        ("convergence", "manufactured-solution convergence study")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--out", help="CSV output path")
        s.add_argument("--scope", choices=("stator", "full"), help="inf-sup test space")
        s.add_argument("--dump-matrices", action="store_true",
                       help="write A and B as 'row col value' text next to --out")
        s.add_argument("--threads", type=int, default=1, help="parallel sweep cells")
        if name == "oracle":
            s.add_argument("--n-max", type=int, default=10)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.scope:
            cfg.scope = args.scope
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.command == "oracle" and args.n_max < 0:
            raise ConfigError("--n-max must be >= 0")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "infsup":
        return cmd_infsup(cfg, args.out, args.threads)
    if args.command == "oracle":
        return cmd_oracle(cfg, args.n_max)
    if args.command == "solve":
        return cmd_solve(cfg, args.out, args.dump_matrices)
    return cmd_convergence(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())

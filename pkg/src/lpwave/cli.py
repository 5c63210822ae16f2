"""Command-line interface: synth, integrate, compare, sweep, render.

Exit codes: 0 success/converged, 2 usage error, 3 I/O error,
4 k_max exhausted without convergence, 5 solver breakdown.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .fileio import (FieldFormatError, format_manifest, parse_manifest, read_field,
                     read_gradient, read_scalar, write_field, write_image)
from .grid import GradientField, Grid, ScalarField, check_same_grid, mean_align
from .irls import IntegrationBreakdown, IntegrationParams, integrate, integrate_least_squares
from .synthetic import (FringeSpec, SyntheticSpec, add_noise, gradient_of, peaks_wavefront,
                        q_error, render_fringe)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_KMAX = 4
EXIT_BREAKDOWN = 5

NOISE_CONVENTION = "sigma = level% of per-component RMS"

log = logging.getLogger("lpwave")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    return vals


def _range(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError("range must be LO,HI with LO < HI")
    return vals[0], vals[1]


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--kmax", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--lmax-factor", type=float, default=1.5)
    p.add_argument("--kappa", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("random", "zero"), default="random")


def _add_synth_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=int, default=480)
    p.add_argument("--cols", type=int, default=640)
    p.add_argument("--mode", choices=("discrete", "analytic"), default="discrete")
    p.add_argument("--coord-scale", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic discontinuous wavefront and its gradient")
    _add_synth_args(p)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise, percent of component RMS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--preview", action="store_true", help="also write PGM previews")

    p = sub.add_parser("integrate", help="integrate a gradient field file")
    p.add_argument("gradient", type=Path, nargs="?")
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--least-squares", action="store_true", help="p = 2 baseline")
    _add_solver_args(p)
    p.add_argument("--truth", type=Path, help="ground-truth wavefront for Q")
    p.add_argument("--out", type=Path)
    p.add_argument("--manifest", type=Path, help="rerun from a manifest written by a previous run")

    p = sub.add_parser("compare", help="normalized error between two scalar fields")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--out", type=Path, help="absolute-difference image (.pgm/.ppm)")
    p.add_argument("--range", type=_range)
    p.add_argument("--csv", type=Path, help="write the result as a one-row CSV")

    p = sub.add_parser("sweep", help="Q over a grid of p values and noise levels")
    _add_synth_args(p)
    p.add_argument("--p", type=_float_list, required=True, help="comma-separated p values")
    p.add_argument("--noise", type=_float_list, default=[0.0], help="comma-separated noise levels (%%)")
    p.add_argument("--repeats", type=int, default=1, help="seeds per (p, noise): seed, seed+1, ...")
    _add_solver_args(p)
    p.add_argument("--csv", type=Path, help="output CSV (default stdout)")

    p = sub.add_parser("render", help="render a field file or a fringe pattern to PGM/PPM")
    p.add_argument("field", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--range", type=_range)
    p.add_argument("--component", choices=("x", "y"), default="x", help="for gradient files")
    p.add_argument("--fringe", action="store_true", help="render a fringe pattern of the wavefront")
    p.add_argument("--period", type=float, default=16.0, help="fringe period q, in grid units")
    p.add_argument("--angle", type=float, default=0.0, help="fringe normal direction, degrees")
    p.add_argument("--distance", type=float, default=1.0, help="screen distance multiplier D")
    return parser


# -- synth -------------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.rows < 2 or args.cols < 2:
        raise UsageError("--rows and --cols must be at least 2")
    if args.noise < 0:
        raise UsageError("--noise must be nonnegative")
    try:
        spec = SyntheticSpec(Grid(args.rows, args.cols), args.coord_scale, args.mode)
    except ValueError as exc:
        raise UsageError(str(exc))
    phi = peaks_wavefront(spec)
    psi = add_noise(gradient_of(phi, spec.mode, spec), args.noise, args.seed)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    truth, grad = out / "truth.lpw", out / "gradient.lpw"
    write_field(truth, phi)
    write_field(grad, psi)
    items = {
        "command": "synth",
        "version": __version__,
        "rows": args.rows,
        "cols": args.cols,
        "mode": args.mode,
        "coord_scale": float(args.coord_scale),
        "noise_percent": float(args.noise),
        "noise_convention": NOISE_CONVENTION,
        "seed": args.seed,
        "gradient_units": "cell (unit spacing)",
        "truth": truth,
        "gradient": grad,
    }
    if args.preview:
        write_image(out / "truth.pgm", phi.values)
        write_image(out / "psi_x.pgm", psi.psi_x.values)
        write_image(out / "psi_y.pgm", psi.psi_y.values)
    (out / "synth.manifest").write_text(format_manifest(items), encoding="utf-8")
    print(f"wrote {truth} and {grad}")
    return EXIT_OK


# -- integrate ---------------------------------------------------------------

def _params_from_args(args, p: float) -> IntegrationParams:
    try:
        return IntegrationParams(p=p, epsilon=args.epsilon, k_max=args.kmax, tol=args.tol,
                                 seed=args.seed, init=args.init, kappa=args.kappa,
                                 lmax_factor=args.lmax_factor)
    except ValueError as exc:
        raise UsageError(str(exc))


def _solve(psi: GradientField, params: IntegrationParams, least_squares: bool):
    if least_squares:
        return integrate_least_squares(psi, params)
    if not params.p < 2:
        raise UsageError("p >= 2 requires --least-squares (and then p is 2)")
    try:
        return integrate(psi, params)
    except ValueError as exc:
        raise UsageError(str(exc))


def _apply_manifest(args) -> None:
    m = parse_manifest(args.manifest.read_text(encoding="utf-8"))
    if m.get("command") != "integrate":
        raise UsageError(f"{args.manifest} is not an integrate manifest")
    args.gradient = Path(m["input"])
    args.out = Path(m["output"]) if args.out is None else args.out
    args.truth = Path(m["truth"]) if m.get("truth", "none") != "none" else None
    args.least_squares = m["least_squares"] == "True"
    args.p = float(m["p"])
    args.epsilon = float(m["epsilon"])
    args.kmax = int(m["k_max"])
    args.tol = float(m["tol"])
    args.kappa = float(m["kappa"])
    args.lmax_factor = float(m["lmax_factor"])
    args.seed = int(m["seed"])
    args.init = m["init"]


def cmd_integrate(args) -> int:
    if args.manifest is not None:
        _apply_manifest(args)
    if args.gradient is None or args.out is None:
        raise UsageError("integrate needs a gradient file and --out (or --manifest)")
    p = 2.0 if args.least_squares else args.p
    params = _params_from_args(args, p)
    psi = read_gradient(args.gradient)
    truth = read_scalar(args.truth) if args.truth else None
    if truth is not None and truth.grid.shape != psi.grid.shape:
        raise FieldFormatError("truth and gradient grids differ")

    try:
        phi, report = _solve(psi, params, args.least_squares)
    except IntegrationBreakdown as exc:
        print(f"solver breakdown at outer iteration {exc.outer_iter}: {exc}", file=sys.stderr)
        if exc.iterate is not None:
            partial = np.asarray(exc.iterate).reshape(psi.grid.shape)
            write_field(args.out, ScalarField(psi.grid, partial - partial.mean()))
        return EXIT_BREAKDOWN

    write_field(args.out, phi)
    q = None
    if truth is not None:
        q = q_error(mean_align(ScalarField(truth.grid, phi.values), truth), truth)
    pcg = params.pcg_for(psi.grid.size)
    items = {
        "command": "integrate",
        "version": __version__,
        "input": args.gradient,
        "truth": args.truth if args.truth else "none",
        "output": args.out,
        "rows": psi.grid.rows,
        "cols": psi.grid.cols,
        "h_x": psi.grid.h_x,
        "h_y": psi.grid.h_y,
        "least_squares": bool(args.least_squares),
        "p": float(p),
        "epsilon": params.epsilon,
        "k_max": params.k_max,
        "tol": params.tol,
        "kappa": params.kappa,
        "lmax_factor": params.lmax_factor,
        "l_max": pcg.l_max,
        "restart_period": pcg.restart_period,
        "seed": params.seed,
        "init": params.init,
        "gauge": "zero mean",
        "outer_iters": report.outer_iters,
        "total_inner_iters": report.total_inner_iters,
        "final_rel_change": float(report.final_rel_change),
        "converged": report.converged,
        "q": "none" if q is None else repr(q),
        "trace_inner_iters": " ".join(str(r.inner_iters) for r in report.trace),
        "trace_rel_change": " ".join(repr(float(r.rel_change)) for r in report.trace),
    }
    manifest = Path(args.out).with_suffix(".manifest")
    manifest.write_text(format_manifest(items), encoding="utf-8")
    msg = (f"outer={report.outer_iters} inner={report.total_inner_iters} "
           f"rel_change={report.final_rel_change:.3e} time={report.wall_time:.2f}s")
    if q is not None:
        msg += f" Q={q:.3e}"
    print(msg)
    return EXIT_OK if report.converged else EXIT_KMAX


# -- compare -----------------------------------------------------------------

def cmd_compare(args) -> int:
    a, b = read_scalar(args.a), read_scalar(args.b)
    try:
        check_same_grid(a, b)
    except ValueError as exc:
        raise UsageError(str(exc))
    aligned = mean_align(a, b)
    q = q_error(aligned, b)
    diff = np.abs(aligned.values - b.values)
    print(f"Q = {q:.6e}")
    print(f"max_abs_diff = {diff.max():.6e}")
    if args.out:
        write_image(args.out, diff, args.range)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b", "Q", "max_abs_diff"])
            w.writerow([args.a, args.b, repr(q), repr(float(diff.max()))])
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

SWEEP_COLUMNS = ["p", "noise_level", "seed", "Q", "outer_iters", "inner_iters", "seconds"]


def _sweep_job(job):
    spec, p, level, seed, kw = job
    phi = peaks_wavefront(spec)
    psi = add_noise(gradient_of(phi, spec.mode, spec), level, seed)
    params = IntegrationParams(p=p, seed=seed, **kw)
    t0 = time.perf_counter()
    est, rep = integrate_least_squares(psi, params) if p == 2 else integrate(psi, params)
    secs = time.perf_counter() - t0
    q = q_error(mean_align(est, phi), phi)
    return [p, level, seed, q, rep.outer_iters, rep.total_inner_iters, round(secs, 3)]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LPW_THREADS", "1")))
    except ValueError:
        return 1


def cmd_sweep(args) -> int:
    if not args.p:
        raise UsageError("--p needs at least one value")
    if not args.noise or any(n < 0 for n in args.noise):
        raise UsageError("--noise needs nonnegative levels")
    if any(p > 2 for p in args.p):
        raise UsageError("p must be < 2 (or exactly 2 for the least-squares baseline)")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    try:
        spec = SyntheticSpec(Grid(args.rows, args.cols), args.coord_scale, args.mode)
        IntegrationParams(k_max=args.kmax, tol=args.tol, init=args.init)
    except ValueError as exc:
        raise UsageError(str(exc))
    kw = dict(epsilon=args.epsilon, k_max=args.kmax, tol=args.tol, init=args.init,
              kappa=args.kappa, lmax_factor=args.lmax_factor)
    jobs = [(spec, p, lvl, args.seed + r, kw)
            for p in sorted(args.p) for lvl in sorted(args.noise) for r in range(args.repeats)]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]

    fh = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([repr(float(row[0])), repr(float(row[1])), row[2], repr(row[3]), *row[4:]])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# -- render ------------------------------------------------------------------

def cmd_render(args) -> int:
    field = read_field(args.field)
    if isinstance(field, GradientField):
        if args.fringe:
            raise UsageError("--fringe needs a scalar wavefront file")
        values = (field.psi_x if args.component == "x" else field.psi_y).values
    elif args.fringe:
        if not args.period > 0:
            raise UsageError("--period must be positive")
        theta = np.deg2rad(args.angle)
        fs = FringeSpec.at_angle(theta, q=args.period, D=args.distance)
        values = render_fringe(field, fs).values
    else:
        values = field.values
    write_image(args.out, values, (0.0, 1.0) if args.fringe and args.range is None else args.range)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "integrate": cmd_integrate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lpwave {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FieldFormatError, KeyError) as exc:
        print(f"lpwave {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

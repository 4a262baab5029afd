"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 convergence or certification
failure.  Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import parse_mu_spec
from .fieldio import dumps_report, write_field, write_text_atomic
from .plane import PlanarProblem, PlaneSolveError, planar_bump, plane_solve_sequence
from .qc import (
    Annulus,
    CylinderMapSamples,
    annulus_modulus,
    dilatation_from_mu,
    geodesic_length_from_modulus,
    grotzsch_area_certify,
    map_dilatation_field,
)
from .solver import (
    DEFAULT_TOL,
    ConvergenceError,
    HomotopyConfig,
    PropertyFailure,
    solve_homotopy,
    solve_neumann,
)
from .spectral import InvalidInputError, PeriodicGrid
from .uniformize import (
    DegenerateLatticeError,
    InconsistentFormError,
    build_uniformizing_form,
    evaluate_map,
    jacobian_min,
    lattice,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3

log = logging.getLogger("beltrami_torus")


class UsageError(InvalidInputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", default="const:0", help="coefficient source, e.g. const:0.3, modes:1,0,0.2, bump:3.14,3.14,2,0.4, file:mu.json")
    p.add_argument("--n", type=int, default=64, help="grid points per axis (even)")
    p.add_argument("--period", type=float, default=2 * math.pi)
    p.add_argument("--method", choices=("neumann", "homotopy"), default="neumann")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--steps", type=int, default=64, help="RK4 steps for the homotopy method")
    p.add_argument("--allow-high-delta", action="store_true", help="accept max|mu| above 0.95")
    _add_output(p)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--plot", action="store_true", help="also write PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beltrami-torus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve for the density f")
    _add_common(p)
    p = sub.add_parser("uniformize", help="solve, then report lattice, tau and map samples")
    _add_common(p)
    p.add_argument("--samples", type=int, default=5, help="map samples per axis of the fundamental square")

    p = sub.add_parser("plane", help="planar problem by doubly periodic approximation")
    p.add_argument("--planar-mu", default="bump:0.5", help="const:c or bump:delta[,radius]")
    p.add_argument("--periods", default="8,16,32")
    p.add_argument("--points-per-unit", type=float, default=8.0)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--eval-points", type=int, default=64)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    _add_output(p)

    p = sub.add_parser("certify", help="quasiconformal diagnostics and the length-area certificate")
    p.add_argument("--map", default="identity", help="identity | affine:c | stretch:K | perturb:eps")
    p.add_argument("--height", type=float, default=2 * math.pi)
    p.add_argument("--nx", type=int, default=257)
    p.add_argument("--nphi", type=int, default=256)
    p.add_argument("--K", type=float, default=None, help="dilatation bound (default: measured)")
    p.add_argument("--mu", default=None, help="optional coefficient whose dilatation is reported")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--period", type=float, default=2 * math.pi)
    _add_output(p)

    p = sub.add_parser("bench", help="timings versus grid size, delta and method")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--deltas", default="0.3,0.5")
    p.add_argument("--methods", default="neumann")
    p.add_argument("--case", choices=("two_mode", "bump_corpus"), default="two_mode")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--steps", type=int, default=64)
    _add_output(p)
    return parser


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    elif isinstance(obj, complex):
        yield prefix + "re", format(obj.real, ".17g")
        yield prefix + "im", format(obj.imag, ".17g")
    elif isinstance(obj, float):
        yield prefix.rstrip("."), format(obj, ".17g")
    else:
        yield prefix.rstrip("."), str(obj)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps_report(report) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(_flatten(report))
    return buf.getvalue()


def _emit(report: dict, args, name: str) -> None:
    text = render_report(report, args.format)
    if args.out is not None:
        write_text_atomic(Path(args.out) / f"{name}.{args.format}", text)
    sys.stdout.write(text)


def _solve(args):
    grid = PeriodicGrid(args.n, args.period)
    mu = parse_mu_spec(args.mu, grid, args.allow_high_delta)
    if args.method == "neumann":
        report = solve_neumann(mu, tol=args.tol, max_iter=args.max_iter)
    else:
        report = solve_homotopy(mu, HomotopyConfig(args.steps), tol=args.tol)
    return grid, mu, report


def _warning_list(caught) -> list:
    return [f"{w.category.__name__}: {w.message}" for w in caught]


def cmd_solve(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid, mu, report = _solve(args)
    out = {"command": "solve", "mu_source": args.mu, "delta": mu.delta, "tol": args.tol,
           **report.to_dict(), "warnings": _warning_list(caught)}
    if args.out is not None:
        write_field(Path(args.out) / "f.json", report.f, "f")
        write_field(Path(args.out) / "mu.json", mu.mu, "mu")
        if args.plot:
            from .plots import plot_heatmap

            plot_heatmap(report.f, Path(args.out) / "f_abs.png", "abs", "|f|")
            plot_heatmap(mu.mu, Path(args.out) / "dilatation.png", "dilatation", "dilatation")
    _emit(out, args, "solve_report")
    return EXIT_OK


def cmd_uniformize(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid, mu, report = _solve(args)
        form = build_uniformizing_form(report.f, mu)
        lat = lattice(form)
    ticks = np.arange(args.samples) * grid.period / args.samples
    samples = []
    for x1 in ticks:
        for x2 in ticks:
            s = evaluate_map(form, complex(x1, x2))
            samples.append({"z": s.z, "phi": s.phi, "jac": s.jac})
    out = {
        "command": "uniformize",
        "mu_source": args.mu,
        "delta": mu.delta,
        "solve": report.to_dict(),
        "a": form.a,
        "b": form.b,
        "lattice": lat.to_dict(),
        "tau": lat.tau,
        "jacobian_min": jacobian_min(form),
        "closedness_defect": form.closedness_defect,
        "map_samples": samples,
        "warnings": _warning_list(caught),
    }
    if args.out is not None:
        write_field(Path(args.out) / "f.json", report.f, "f")
        write_field(Path(args.out) / "psi.json", form.psi, "psi")
        if args.plot:
            from .plots import plot_grid_image, plot_heatmap

            plot_grid_image(form, Path(args.out) / "grid.png")
            plot_heatmap(mu.mu, Path(args.out) / "dilatation.png", "dilatation", "dilatation")
    _emit(out, args, "uniformize_report")
    return EXIT_OK


def _planar_problem(text: str) -> PlanarProblem:
    kind, _, arg = text.partition(":")
    try:
        vals = [float(v) for v in arg.split(",") if v.strip()]
        if kind == "const":
            return PlanarProblem.from_constant(complex(vals[0], vals[1] if len(vals) > 1 else 0.0))
        if kind == "bump":
            return planar_bump(vals[0], vals[1] if len(vals) > 1 else 1.0)
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"cannot parse planar coefficient {text!r}: {exc}") from exc
    raise InvalidInputError(f"unknown planar coefficient kind {kind!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse number list {text!r}") from exc


def cmd_plane(args) -> int:
    problem = _planar_problem(args.planar_mu)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = plane_solve_sequence(problem, _floats(args.periods), args.points_per_unit, args.margin,
                                   eval_points=args.eval_points, tol=args.tol)
    out = {"command": "plane", "planar_mu": args.planar_mu, **rep.to_dict(),
           "warnings": sorted(set(_warning_list(caught)))}
    _emit(out, args, "plane_report")
    return EXIT_OK


def _cylinder_map(spec: str, height: float, nx: int, nphi: int) -> CylinderMapSamples:
    kind, _, arg = spec.partition(":")
    try:
        if kind == "identity":
            return CylinderMapSamples.from_function(lambda z: z, height, nx, nphi)
        val = float(arg)
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse map {spec!r}") from exc
    if kind == "affine":
        return CylinderMapSamples.from_function(lambda z: z + val * np.conj(z), height, nx, nphi,
                                                phi_shift=2j * math.pi * (1 - val))
    if kind == "stretch":
        return CylinderMapSamples.from_function(lambda z: val * z.real + 1j * z.imag, height, nx, nphi)
    if kind == "perturb":
        return CylinderMapSamples.from_function(lambda z: perturbed_identity(z, val, height), height, nx, nphi)
    raise InvalidInputError(f"unknown map kind {kind!r}")


def perturbed_identity(z: np.ndarray, eps: float, height: float) -> np.ndarray:
    """Identity plus a smooth perturbation vanishing on both boundary circles."""
    x, phi = z.real, z.imag
    return z + eps * np.sin(np.pi * x / height) * (np.exp(1j * phi) + 0.5j * np.sin(2 * phi))


def cmd_certify(args) -> int:
    samples = _cylinder_map(args.map, args.height, args.nx, args.nphi)
    _, measured = map_dilatation_field(samples)
    K = measured if args.K is None else args.K
    rep = grotzsch_area_certify(samples, K)
    m_source = annulus_modulus(Annulus.cylinder(args.height))
    out = {
        "command": "certify",
        "map": args.map,
        "grotzsch": rep.to_dict(),
        "modulus_source": m_source,
        "geodesic_length_source": geodesic_length_from_modulus(m_source),
    }
    if args.mu is not None:
        mu = parse_mu_spec(args.mu, PeriodicGrid(args.n, args.period))
        out["mu_delta"] = mu.delta
        out["mu_max_dilatation"] = dilatation_from_mu(mu.delta)
    _emit(out, args, "certify_report")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .corpus import bump, two_mode

    make = two_mode if args.case == "two_mode" else bump
    rows = []
    for n in (int(v) for v in _floats(args.sizes)):
        grid = PeriodicGrid(n)
        for d in _floats(args.deltas):
            mu = make(grid, d)
            for method in args.methods.split(","):
                t0 = time.perf_counter()
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    if method == "neumann":
                        r = solve_neumann(mu, tol=args.tol)
                    elif method == "homotopy":
                        r = solve_homotopy(mu, HomotopyConfig(args.steps), tol=args.tol)
                    else:
                        raise InvalidInputError(f"unknown method {method!r}")
                    form = build_uniformizing_form(r.f, mu) if r.residual_l2 <= 1e-6 else None
                    tau = lattice(form).tau if form is not None else None
                elapsed = time.perf_counter() - t0
                rows.append({"n": n, "delta": d, "method": method, "seconds": elapsed,
                             "iterations": r.iterations, "residual_l2": r.residual_l2, "tau": tau})
    _emit({"command": "bench", "case": args.case, "runs": rows}, args, "bench_report")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "uniformize": cmd_uniformize,
    "plane": cmd_plane,
    "certify": cmd_certify,
    "bench": cmd_bench,
}


def _diagnostic(kind: str, exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _diagnostic("usage", exc, EXIT_INVALID)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, PlaneSolveError, InconsistentFormError, DegenerateLatticeError) as exc:
        return _diagnostic("convergence", exc, EXIT_FAILED)
    except PropertyFailure as exc:
        return _diagnostic("certification", exc, EXIT_FAILED)
    except (InvalidInputError, ValueError) as exc:
        return _diagnostic("validation", exc, EXIT_INVALID)
    except OSError as exc:
        return _diagnostic("io", exc, EXIT_INVALID)


if __name__ == "__main__":
    sys.exit(main())

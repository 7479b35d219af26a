"""``excursion`` command line: bound tables, comparisons, simulation, geometry."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .formats import COMPARE_COLUMNS, TAIL_COLUMNS, format_csv, load_problem, load_region, write_csv
from .geom2d import CompositeRegion2D, GeometrySummary2D, Polygon2D, emptyability, summarize
from .geom3d import Polyhedron3D, polyhedron_summary
from .montecarlo import BoundViolation, KernelSpec, check_one_sided, simulate_tail
from .quadform import FieldModel, liwei_expectation


class UsageError(ValueError):
    pass


def parse_ugrid(spec):
    """'MIN:MAX:COUNT' with inclusive endpoints, or a single level."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1 or hi < lo or (count == 1 and hi != lo):
                raise UsageError(f"bad u-grid {spec!r}: need MIN <= MAX and COUNT >= 1")
            return np.linspace(lo, hi, count)
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
    raise UsageError(f"bad u-grid {spec!r}: expected MIN:MAX:COUNT or a single number")


def model_from_args(args):
    if args.rho2 is not None and args.c is not None:
        raise UsageError("give only one of --rho2 and --c")
    if args.c is not None:
        return FieldModel.from_c(args.c)
    return FieldModel(0.25 if args.rho2 is None else args.rho2)


def _emit(args, columns, rows):
    text = format_csv(columns, rows)
    if args.out:
        write_csv(args.out, columns, rows)
    else:
        sys.stdout.write(text)
    return text


def _need_geometry(args):
    path = getattr(args, "path", None) or args.geometry
    if not path:
        raise UsageError("--geometry PATH is required")
    return load_region(path)


def _region_summary(args):
    if getattr(args, "side", None) is not None:
        return GeometrySummary2D.square(args.side)
    region = _need_geometry(args)
    if isinstance(region, Polyhedron3D):
        raise UsageError("this command needs a 2D geometry")
    return summarize(region)


def cmd_bound2d(args):
    g = _region_summary(args)
    table = bounds.bound_table(parse_ugrid(args.u), g, model_from_args(args), args.tol)
    _emit(args, COMPARE_COLUMNS, list(table.rows()))
    if args.svg:
        from .plotting import plot_bounds
        plot_bounds(table, args.svg, log_scale=args.log_scale)
    return 0


cmd_compare_single = cmd_bound2d


def cmd_compare(args):
    if not args.panels:
        return cmd_compare_single(args)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    u = parse_ugrid(args.u)
    panels = []
    for name, side, rho2 in bounds.FIGURE_PANELS:
        table = bounds.bound_table(u, GeometrySummary2D.square(side), FieldModel(rho2), args.tol)
        write_csv(outdir / f"panel_{name}.csv", COMPARE_COLUMNS, list(table.rows()))
        panels.append((f"({name}) T={side:g}, rho''(0)={rho2:g}", table))
    if args.svg:
        from .plotting import plot_panels
        plot_panels(panels, args.svg, log_scale=args.log_scale)
    print(json.dumps({"panels": [p[0] for p in panels], "directory": str(outdir)}))
    return 0


def cmd_bound3d(args):
    region = _need_geometry(args)
    if not isinstance(region, Polyhedron3D):
        raise UsageError("bound3d needs a polyhedron geometry")
    g = polyhedron_summary(region)
    u = parse_ugrid(args.u)
    pr = np.atleast_1d(bounds.p_record_3d(u, g, model_from_args(args)))
    _emit(args, ("u", "p_record_3d"), list(zip(u, pr)))
    return 0


def cmd_quadform(args):
    p = load_problem(args.path or args.geometry)
    value = liwei_expectation(p, args.tol)
    _emit(args, ("expectation", "tol"), [(value, args.tol)])
    return 0


def cmd_swiss_cheese(args):
    m = model_from_args(args)
    rows = []
    for u in parse_ugrid(args.u):
        r = bounds.swiss_cheese_bound(float(u), m, levels=args.levels)
        rows.append((r.u, r.bound, r.n_disks))
    _emit(args, ("u", "bound", "n"), rows)
    return 0


def cmd_simulate(args):
    region = _need_geometry(args)
    kernel = KernelSpec()
    if args.rho2 is not None or args.c is not None:
        if model_from_args(args) != kernel.model:
            raise UsageError("simulation supports only the squared-exponential kernel with rho''(0) = 1/4")
    est = simulate_tail(region, kernel, args.step, parse_ugrid(args.u), args.n, args.seed, args.threads)
    _emit(args, TAIL_COLUMNS, list(est.rows()))
    if isinstance(region, Polyhedron3D):
        name, pr = "p_record_3d", bounds.p_record_3d(est.u, polyhedron_summary(region), kernel.model)
        curves = {"p_record": pr}
    else:
        g = summarize(region)
        name, pr = "p_record", bounds.p_record_2d(est.u, g, kernel.model)
        curves = {"p_record": pr, "p_direct": bounds.p_direct_2d(est.u, g, kernel.model)}
    if args.svg:
        from .plotting import plot_tail
        plot_tail(est, {k: np.atleast_1d(v) for k, v in curves.items()}, args.svg)
    try:
        check_one_sided(est, pr)
    except BoundViolation as exc:
        print(f"FAIL one-sided check against {name}: {exc}", file=sys.stderr)
        return 1
    print(f"PASS one-sided check against {name}: p_hat <= bound + 3 x half-width at "
          f"{est.u.size} levels", file=sys.stderr)
    return 0


def cmd_geometry(args):
    region = _need_geometry(args)
    if isinstance(region, Polyhedron3D):
        g = polyhedron_summary(region)
        record = {"kind": "polyhedron", "volume": g.volume, "surface_area": g.surface_area,
                  "caliper": g.caliper, "edges": len(g.edges)}
    else:
        g = summarize(region)
        record = {"kind": "composite" if isinstance(region, CompositeRegion2D) else "polygon",
                  "area": g.area, "boundary_length": g.boundary_length,
                  "components": g.components}
        if isinstance(region, Polygon2D):
            rep = emptyability(region)
            record["emptyable"] = rep.emptyable
    cols = tuple(record)
    _emit(args, cols, [tuple(record[k] for k in cols)])
    return 0


COMMANDS = {
    "bound2d": cmd_bound2d,
    "bound3d": cmd_bound3d,
    "compare": cmd_compare,
    "quadform": cmd_quadform,
    "simulate": cmd_simulate,
    "swiss-cheese": cmd_swiss_cheese,
    "geometry": cmd_geometry,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--geometry", "--region", dest="geometry", metavar="PATH")
    model = common.add_mutually_exclusive_group()
    model.add_argument("--rho2", type=float, help="rho''(0); Var(X''_11) = 12 rho2")
    model.add_argument("--c", type=float, help="sqrt(12 rho2 - 1)")
    common.add_argument("--u", default="0:6:200", help="MIN:MAX:COUNT (inclusive) or one value")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--svg", metavar="PATH", help="figure file (format from the suffix)")
    common.add_argument("--log-scale", action="store_true")

    parser = argparse.ArgumentParser(prog="excursion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("quadform", "geometry"):
            p.add_argument("path", nargs="?", help="input JSON (alternative to --geometry)")
        if name in ("bound2d", "compare"):
            p.add_argument("--side", type=float, help="use the square [0, T]^2 instead of --geometry")
        if name == "compare":
            p.add_argument("--panels", action="store_true",
                           help="write the six reference panels into the --out directory")
        if name == "swiss-cheese":
            p.add_argument("--levels", type=int, default=5)
        if name == "simulate":
            p.add_argument("--n", type=int, default=100_000)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--step", type=float, default=0.05)
            p.add_argument("--threads", type=int, help="worker threads (default: EXCURSION_THREADS or CPU count)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, TypeError, ArithmeticError, OSError, np.linalg.LinAlgError, RuntimeError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(record), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

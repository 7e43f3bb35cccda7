"""Command-line entry point.

Verbs::

    solve    problem file -> run report (exit 0 iff the residual meets --tol)
    forward  support vector, vertex list or report -> L_p surface area vector
    check    admission checks only
    gen      seeded random problem file
    export   run report -> triangulated OBJ (3-d only)

Exit codes: 0 success, 2 admission failure, 3 convergence failure, 4 I/O or
parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    AdmissionError,
    ConvergenceError,
    DimensionError,
    InfeasibleError,
    MinkowskiError,
    ParseError,
    ReportIOError,
    ScaleSingular,
)
from .generate import gen_random_instance
from .io import (
    RunReport,
    _dump_json,
    _load_json,
    export_obj,
    read_problem,
    read_report,
    write_problem,
    write_report,
)
from .measure import sp_measure
from .outer import solve
from .polytope import DirectionSet, intersect_halfspaces, offsets_from_points

EXIT_OK = 0
EXIT_ADMISSION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

SUPPORT_FORMAT = "lp-minkowski-support"
VERTICES_FORMAT = "lp-minkowski-vertices"
FORWARD_FORMAT = "lp-minkowski-forward"

log = logging.getLogger("lpminkowski")


def _emit(data, out):
    if out is None:
        print(json.dumps(data, indent=1, allow_nan=False))
    else:
        _dump_json(data, out)


def _solve_one(path, out, p, tol, max_iters, trace):
    """Solve a single problem file; returns ``(exit code, message)``."""
    problem = read_problem(path)
    if p is not None:
        problem.p = p
    measure = problem.to_measure()
    opts = problem.solver_options(tol=tol, max_iterations=max_iters, trace=trace or None)
    try:
        report = solve(measure, opts)
        code = EXIT_OK
    except ConvergenceError as exc:
        best = exc.best
        if out is not None and hasattr(best, "solution"):
            write_report(RunReport.from_solve(problem, best), out)
        return EXIT_CONVERGENCE, f"{path}: {exc}"
    run = RunReport.from_solve(problem, report)
    if run.max_relative_residual > opts.tol:
        code = EXIT_CONVERGENCE
    if out is None:
        print(json.dumps(run.to_dict(), indent=1, allow_nan=False))
    else:
        write_report(run, out)
    msg = (
        f"{path}: {report.termination} after {report.iterations} iterations, "
        f"max relative residual {run.max_relative_residual:.3e}"
    )
    return code, msg


def _guarded(fn, *args):
    try:
        return fn(*args)
    except AdmissionError as exc:
        detail = f" (directions {exc.indices})" if exc.indices else ""
        return EXIT_ADMISSION, f"admission failure: {exc}{detail}"
    except (DimensionError, ScaleSingular) as exc:
        return EXIT_ADMISSION, f"admission failure: {exc}"
    except (ParseError, ReportIOError, OSError) as exc:
        return EXIT_IO, f"I/O error: {exc}"
    except ConvergenceError as exc:
        return EXIT_CONVERGENCE, f"convergence failure: {exc}"


def cmd_solve(args):
    inputs = args.input
    if len(inputs) == 1 and not args.batch:
        code, msg = _guarded(_solve_one, inputs[0], args.out, args.p, args.tol, args.max_iters, args.trace)
        print(msg, file=sys.stderr)
        return code

    outdir = Path(args.out) if args.out else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (path, None if outdir is None else str(outdir / (Path(path).stem + ".report.json")))
        for path in inputs
    ]
    workers = args.batch or 1
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_guarded, _solve_one, path, out, args.p, args.tol, args.max_iters, False)
            for path, out in jobs
        ]
        results = [f.result() for f in futures]
    for _, msg in results:
        print(msg, file=sys.stderr)
    return max(code for code, _ in results)


def _forward_mesh(path, p):
    data = _load_json(path)
    fmt = data.get("format") if isinstance(data, dict) else None
    if fmt == "lp-minkowski-report":
        report = RunReport.from_dict(data)
        return report.mesh(), report.p if p is None else p
    if p is None:
        raise ParseError("--p is required unless the input is a run report")
    try:
        if fmt == VERTICES_FORMAT:
            dirs, h = offsets_from_points(np.array(data["vertices"], dtype=float))
        elif fmt == SUPPORT_FORMAT:
            dirs = DirectionSet.from_vectors([it["u"] for it in data["items"]], normalize=True)
            h = np.array([float(it["h"]) for it in data["items"]])
        else:
            raise ParseError(f"{path}: unknown input format {fmt!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{path}: malformed input ({exc!r})") from exc
    return intersect_halfspaces(dirs, h), p


def _forward(path, out, p):
    mesh, p = _forward_mesh(path, p)
    sp = sp_measure(mesh, p)
    _emit(
        {
            "format": FORWARD_FORMAT,
            "dim": mesh.dim,
            "p": p,
            "items": [
                {"u": mesh.dirs.dirs[k].tolist(), "h": float(mesh.h[k]),
                 "a": float(mesh.areas[k]), "sp": float(sp[k])}
                for k in range(mesh.N)
            ],
            "volume": mesh.volume,
        },
        out,
    )
    return EXIT_OK, f"{path}: forward measure of {mesh.n_facets} facets"


def cmd_forward(args):
    code, msg = _guarded(_forward, args.input[0], args.out, args.p)
    print(msg, file=sys.stderr)
    return code


def _check(path, p):
    problem = read_problem(path)
    if p is not None:
        problem.p = p
    m = problem.to_measure()
    return EXIT_OK, f"{path}: admissible (dim {m.dim}, N {m.N}, p {m.p:g}, regime {m.regime})"


def cmd_check(args):
    code, msg = _guarded(_check, args.input[0], args.p)
    print(msg, file=sys.stderr)
    return code


def cmd_gen(args):
    p = 0.5 if args.p is None else args.p
    try:
        problem = gen_random_instance(args.seed, args.dim, args.n_dirs, p)
    except InfeasibleError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_ADMISSION
    except ValueError as exc:
        print(f"bad arguments: {exc}", file=sys.stderr)
        return EXIT_ADMISSION
    if args.out is None:
        print(json.dumps(problem.to_dict(), indent=1))
        return EXIT_OK
    code, msg = _guarded(lambda: (write_problem(problem, args.out), (EXIT_OK, f"wrote {args.out}"))[1])
    print(msg, file=sys.stderr)
    return code


def _export(path, out):
    if out is None:
        raise ParseError("export needs --out")
    report = read_report(path)
    export_obj(report.mesh(), out)
    return EXIT_OK, f"wrote {out}"


def cmd_export(args):
    code, msg = _guarded(_export, args.input[0], args.out)
    print(msg, file=sys.stderr)
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="lpminkowski", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", nargs="+", required=True, help="input file(s)")
        sp.add_argument("--out", default=None, help="output path (stdout when omitted)")
        sp.add_argument("--p", type=float, default=None, help="override the exponent p")
        return sp

    sp = common(sub.add_parser("solve", help="solve a problem file"))
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iters", type=int, default=10000)
    sp.add_argument("--trace", action="store_true", help="log every outer iteration")
    sp.add_argument(
        "--batch", type=int, default=0, metavar="WORKERS",
        help="solve several inputs in parallel; --out is then a directory",
    )
    sp.set_defaults(func=cmd_solve)

    sp = common(sub.add_parser("forward", help="L_p surface area measure of a polytope"))
    sp.set_defaults(func=cmd_forward)

    sp = common(sub.add_parser("check", help="run admission checks only"))
    sp.set_defaults(func=cmd_check)

    sp = common(sub.add_parser("gen", help="write a seeded random instance"), needs_input=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--n-dirs", type=int, default=6)
    sp.set_defaults(func=cmd_gen)

    sp = common(sub.add_parser("export", help="write the solution of a report as OBJ"))
    sp.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "trace", False) else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except MinkowskiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Problem files are TOML (or JSON, chosen by extension)::

    L = 1.0
    f = "1 + x"

    [Q]
    coeffs = [1, 0, -2, 0, 1]     # constant-first; strings are expressions in x

    [P]
    coeffs = [-4, 0, 1]

    [options]
    tol = 1e-6
    epsilons = [1e-2, 1e-3, 1e-4]

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NumericalError, ValidationError
from .expression import SmoothExpression
from .operators import DifferentialOperator, ProblemSpec
from .oracle import kernel_from_symbol, perturbation_sweep, residual, richardson_interior
from .parsing import parse_expression, uses_parameter
from .solver import DistributionalSolution, solve

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("distsolve")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
LOG_ENV = "DISTSOLVE_LOG_LEVEL"
SOLUTION_FORMAT = "distsolve-solution/1"

DEFAULT_OPTIONS = {
    "samples": 2048,
    "residual_grid": 1001,
    "tol": 1e-6,
    "epsilons": [1e-2, 1e-3, 1e-4],
    "richardson_epsilons": None,
    "nystrom_n": 800,
    "method": "auto",
    "z": None,
    "workers": None,
}
_TOP_KEYS = {"Q", "P", "f", "L", "options"}
_Q_KEYS = {"coeffs", "left_basis", "right_basis"}
_P_KEYS = {"coeffs"}


# -- problem files ------------------------------------------------------------

def read_document(path) -> dict:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(raw.decode("utf-8"))
    return tomllib.loads(raw.decode("utf-8"))


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ValidationError(f"{where} must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValidationError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _coefficient(value, z, where):
    if isinstance(value, bool):
        raise ValidationError(f"{where}: booleans are not coefficients")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        e = parse_expression(value, z)
        return e.constant_value() if e.is_constant() else e
    raise ValidationError(f"{where}: coefficient must be a number or an expression string")


def options_from(doc) -> dict:
    opts = dict(DEFAULT_OPTIONS)
    given = doc.get("options", {})
    _check_keys(given, set(DEFAULT_OPTIONS), "[options]")
    opts.update(given)
    return opts


def problem_from_document(doc: dict, z=None) -> ProblemSpec:
    """Validate a parsed document and build the :class:`ProblemSpec`."""
    _check_keys(doc, _TOP_KEYS, "problem file")
    for key in ("Q", "P", "f", "L"):
        if key not in doc:
            raise ValidationError(f"problem file is missing {key!r}")
    options_from(doc)
    _check_keys(doc["Q"], _Q_KEYS, "[Q]")
    _check_keys(doc["P"], _P_KEYS, "[P]")
    ops = []
    for name in ("Q", "P"):
        coeffs = doc[name].get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ValidationError(f"{name}.coeffs must be a nonempty array")
        ops.append(DifferentialOperator(tuple(_coefficient(c, z, f"{name}.coeffs[{i}]") for i, c in enumerate(coeffs))))
    f = doc["f"]
    f = parse_expression(f, z) if isinstance(f, str) else SmoothExpression.constant(float(f))
    bases = []
    for key in ("left_basis", "right_basis"):
        items = doc["Q"].get(key)
        bases.append(None if items is None else tuple(parse_expression(s, z) for s in items))
    L = doc["L"]
    if isinstance(L, bool) or not isinstance(L, (int, float)):
        raise ValidationError("L must be a number")
    return ProblemSpec(ops[0], ops[1], f, float(L), bases[0], bases[1])


# -- serialization --------------------------------------------------------------

def _dump(value, indent=0) -> str:
    """JSON with sorted keys and 17 significant digits for every float."""
    pad = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(value[k], indent + 1)}" for k in sorted(value)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        if len(value) == 0:
            return "[]"
        return "[" + ", ".join(_dump(v, indent + 1) for v in value) + "]"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return "null"
        return format(v, ".17g") if v != int(v) or abs(v) >= 1e16 else format(v, ".1f")
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(value) -> str:
    return _dump(value) + "\n"


def atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


def solution_record(sol: DistributionalSolution) -> dict:
    meta = {k: v for k, v in sol.metadata.items()}
    return {
        "format": SOLUTION_FORMAT,
        "L": sol.L,
        "alpha": sol.alpha,
        "delta0": sol.delta0.tolist(),
        "deltaL": sol.deltaL.tolist(),
        "regular_terms": None if sol.expression is None else sol.expression.to_list(),
        "metadata": meta,
    }


def write_solution(sol: DistributionalSolution, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "solution.json", dumps(solution_record(sol)))
    atomic_write(out / "regular.csv", csv_text(("x", "h_regular"), zip(sol.regular_x, sol.regular_y)))


def load_solution(out_dir) -> DistributionalSolution:
    """Rebuild a solution from ``solution.json`` and ``regular.csv``."""
    out = Path(out_dir)
    rec = json.loads((out / "solution.json").read_text())
    if rec.get("format") != SOLUTION_FORMAT:
        raise ValidationError(f"{out / 'solution.json'} is not a solution file")
    data = np.loadtxt(out / "regular.csv", delimiter=",", skiprows=1, ndmin=2)
    terms = rec.get("regular_terms")
    expr = None if terms is None else SmoothExpression.from_list(terms)
    evaluator = None if expr is not None else CubicSpline(data[:, 0], data[:, 1])
    return DistributionalSolution(
        rec["L"], rec["alpha"], rec["delta0"], rec["deltaL"], data[:, 0], data[:, 1], expr, evaluator,
        rec.get("metadata", {}),
    )


# -- commands -----------------------------------------------------------------------

def _solve(problem, opts, method=None):
    return solve(problem, samples=int(opts["samples"]), method=method or opts["method"])


def cmd_solve(args):
    doc = read_document(args.file)
    opts = options_from(doc)
    z = _single_z(doc, opts)
    sol = _solve(problem_from_document(doc, z), opts)
    write_solution(sol, args.out)
    print(f"delta0 = {sol.delta0.tolist()}")
    print(f"deltaL = {sol.deltaL.tolist()}")
    print(f"condition = {sol.metadata['condition']:.3e}")
    print(f"wrote {Path(args.out) / 'solution.json'} and {Path(args.out) / 'regular.csv'}")
    return EXIT_OK


def _single_z(doc, opts):
    """For solve/verify/sweep a z-dependent f takes the first grid value."""
    if not isinstance(doc.get("f"), str) or not uses_parameter(doc["f"]):
        return None
    grid = opts["z"]
    if not grid:
        raise ValidationError("f depends on z but options.z is empty")
    return float(grid[0])


def _parse_perturb(text):
    try:
        site, index, amount = text.split(":")
        if site not in ("0", "L"):
            raise ValueError
        return site, int(index), float(amount)
    except ValueError:
        raise ValidationError(f"--perturb expects site:index:amount with site 0 or L, got {text!r}") from None


def cmd_verify(args):
    doc = read_document(args.file)
    opts = options_from(doc)
    tol = float(args.tol if args.tol is not None else opts["tol"])
    problem = problem_from_document(doc, _single_z(doc, opts))
    if not (problem.Q.is_constant and problem.P.is_constant):
        raise ValidationError("verify needs constant-coefficient Q and P")
    kernel = kernel_from_symbol(problem.Q, problem.P)
    grid = int(opts["residual_grid"])
    if args.solution:
        sol = load_solution(args.solution)
        tail = sol.metadata.get("tail_residual", float("nan"))
    else:
        sol = _solve(problem, opts)
        tail = sol.metadata["tail_residual"]
    if args.perturb:
        site, index, amount = _parse_perturb(args.perturb)
        if not 0 <= index < sol.alpha:
            raise ValidationError(f"delta index {index} outside [0, {sol.alpha - 1}]")
        sol = sol.perturbed(site, index, amount)
    res = residual(kernel, sol, problem.f, grid)
    print(f"residual = {res:.3e}")
    if problem.m == 0 and not args.solution:
        other = "general" if sol.metadata.get("method") == "fast" else "fast"
        alt = _solve(problem, opts, other)
        if args.perturb:
            alt = alt.perturbed(site, index, amount)
        print(f"residual_{other} = {residual(kernel, alt, problem.f, grid):.3e}")
    print(f"tail_residual = {tail:.3e}")
    if kernel.is_even_symbol():
        print(f"symmetry_defect = {kernel.symmetry_defect():.3e}")
    else:
        print("symmetry_defect = n/a (symbol is not even)")
    ok = res <= tol
    print(f"{'PASS' if ok else 'FAIL'}: residual {'<=' if ok else '>'} {tol:.1e}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args):
    doc = read_document(args.file)
    opts = options_from(doc)
    problem = problem_from_document(doc, _single_z(doc, opts))
    kernel = kernel_from_symbol(problem.Q, problem.P)
    sol = _solve(problem, opts)
    N = int(opts["nystrom_n"])
    rows = perturbation_sweep(kernel, problem.f, [float(e) for e in opts["epsilons"]], sol, N=N)
    header = ("epsilon", "interior_deviation", "mass0", "massL", "delta0", "deltaL", "condition", "layer_width")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "sweep.csv", csv_text(header, ([getattr(r, k) for k in header] for r in rows)))
    for r in rows:
        print(f"eps={r.epsilon:.1e}  deviation={r.interior_deviation:.3e}  "
              f"mass0={r.mass0:.6f} ({r.delta0:.6f})  massL={r.massL:.6f} ({r.deltaL:.6f})")
    if opts["richardson_epsilons"]:
        x = np.linspace(0.2 * problem.L, 0.8 * problem.L, 61)
        ext = richardson_interior(kernel, problem.f, [float(e) for e in opts["richardson_epsilons"]], x, N, problem.L)
        print(f"richardson_deviation = {np.max(np.abs(ext - sol.regular(x))):.3e}")
    return EXIT_OK


def _filter_record(doc, z, index, out_dir, samples, grid):
    problem = problem_from_document(doc, z)
    sol = solve(problem, samples=samples)
    rec = solution_record(sol)
    rec["z"] = z
    res = None
    if problem.Q.is_constant and problem.P.is_constant:
        res = residual(kernel_from_symbol(problem.Q, problem.P), sol, problem.f, grid)
    rec["residual"] = res
    atomic_write(Path(out_dir) / f"record_{index:04d}.json", dumps(rec))
    return z, res


def cmd_filter_demo(args):
    doc = read_document(args.file)
    opts = options_from(doc)
    grid = opts["z"]
    if not isinstance(grid, list) or not grid:
        raise ValidationError("filter-demo needs a nonempty options.z grid")
    zs = [float(z) for z in grid]
    problem_from_document(doc, zs[0])  # fail fast on invalid input
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tol = float(opts["tol"])
    jobs = [(doc, z, i, str(out), int(opts["samples"]), int(opts["residual_grid"])) for i, z in enumerate(zs)]
    workers = opts["workers"]
    if workers == 1 or len(jobs) == 1:
        results = [_filter_record(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_filter_record, *zip(*jobs)))
    worst = 0.0
    for z, res in results:
        print(f"z={z:.6g}  residual={'n/a' if res is None else format(res, '.3e')}")
        worst = max(worst, 0.0 if res is None else res)
    print(f"wrote {len(results)} records to {out}")
    return EXIT_OK if worst <= tol else EXIT_VERIFY


# -- entry point ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="distsolve", description="Solve R h = f with Q R = P delta on [0, L].")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve and write solution.json and regular.csv")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("verify", help="check the residual with the kernel oracle")
    p.add_argument("file")
    p.add_argument("--tol", type=float)
    p.add_argument("--solution", help="directory holding a previous solve output")
    p.add_argument("--perturb", help="inject site:index:amount into a delta coefficient")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", help="regularized Nystrom sweep over epsilon")
    p.add_argument("file")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("filter-demo", help="solve for every z of options.z in parallel")
    p.add_argument("file")
    p.add_argument("--out", default="filter-demo")
    p.set_defaults(func=cmd_filter_demo)
    return parser


def _configure_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

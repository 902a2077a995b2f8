"""Command-line front end: solve, converge, list, verify.

Exit codes: 0 success, 2 configuration error, 3 solver failure. CSV/JSON
artifacts go to --output; --plot additionally renders a PNG figure next to
the artifact. SPECTRAL_TRANSPORT_THREADS caps sweep parallelism (0 or
unset runs rows sequentially).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, problem, report
from .assembly import ConfigurationError, Mesh, assemble
from .problem import UnknownProblemError, catalog, coercivity_margin, load_problem, solution_residual
from .solve import (
    IterationFailureError,
    LinearSolveError,
    SingularMatrixError,
    scalar_flux_values,
    solve_direct,
    solve_source_iteration,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

FLUX_SAMPLES = 401  # uniform sampling grid including both endpoints


class CliConfigError(Exception):
    pass


def _thread_budget():
    raw = os.environ.get("SPECTRAL_TRANSPORT_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        raise CliConfigError(f"SPECTRAL_TRANSPORT_THREADS must be an integer, got {raw!r}")


def _load_spec(name_or_path):
    if name_or_path.endswith(".json") or "/" in name_or_path:
        return load_problem(name_or_path)
    return catalog(name_or_path)


def _parse_elements(arg, spec):
    """Interior element boundaries: 'auto' places them at cross-section jumps."""
    if arg is None or arg == "auto":
        return list(spec.operator_breakpoints())
    if arg in ("", "none"):
        return []
    try:
        return [float(t) for t in arg.split(",")]
    except ValueError:
        raise CliConfigError(f"--elements must be 'auto' or a comma list of reals, got {arg!r}")


def _parse_int_list(arg, flag):
    try:
        return [int(t) for t in arg.split(",")]
    except ValueError:
        raise CliConfigError(f"{flag} must be a comma list of integers, got {arg!r}")


def _fmt(v):
    return repr(float(v))


def _dump_system(system, stem):
    np.savetxt(f"{stem}_matrix.csv", system.matrix_a, delimiter=",")
    np.savetxt(f"{stem}_rhs.csv", system.rhs, delimiter=",")
    with open(f"{stem}_indices.csv", "w") as fh:
        fh.write("set,index\n")
        for i in system.idx_io:
            fh.write(f"io,{i}\n")
        for i in system.idx_bc:
            fh.write(f"bc,{i}\n")


def _cmd_solve(args):
    spec = _load_spec(args.problem)
    if args.solver == "direct" and (args.tol is not None or args.max_iter is not None):
        raise CliConfigError("--tol/--max-iter only apply with --solver source-iteration "
                             "(offending pair: --solver direct with an iteration flag)")
    mesh = Mesh.from_breakpoints(spec.domain, _parse_elements(args.elements, spec), args.n)
    system = assemble(spec, mesh, args.m)

    if args.solver == "source-iteration":
        tol = args.tol if args.tol is not None else 1e-13
        max_iter = args.max_iter if args.max_iter is not None else 200
        sol, iterations = solve_source_iteration(system, tol=tol, max_iter=max_iter)
        print(f"source iteration converged in {iterations} sweeps", file=sys.stderr)
    else:
        sol = solve_direct(system)

    xs = np.linspace(spec.domain[0], spec.domain[1], FLUX_SAMPLES)
    u_num = scalar_flux_values(sol, xs)
    u_exact = None
    if spec.exact_flux is not None:
        u_exact = np.array([spec.exact_flux(x=x) for x in xs])

    output = Path(args.output or f"{Path(args.problem).stem}_solve.{args.format}")
    if args.format == "csv":
        with open(output, "w") as fh:
            if u_exact is None:
                fh.write("x,u_num\n")
                for x, u in zip(xs, u_num):
                    fh.write(f"{_fmt(x)},{_fmt(u)}\n")
            else:
                fh.write("x,u_num,u_exact,abs_err\n")
                for x, u, ue in zip(xs, u_num, u_exact):
                    fh.write(f"{_fmt(x)},{_fmt(u)},{_fmt(ue)},{_fmt(abs(u - ue))}\n")
    else:
        doc = {"x": xs.tolist(), "u_num": u_num.tolist()}
        if u_exact is not None:
            doc["u_exact"] = u_exact.tolist()
            doc["abs_err"] = np.abs(u_num - u_exact).tolist()
        output.write_text(json.dumps(doc, indent=2) + "\n")

    if args.dump_coeffs:
        coeff_path = output.with_suffix("").with_name(output.stem + "_coeffs.csv")
        with open(coeff_path, "w") as fh:
            fh.write("m,n,coeff\n")
            for m in range(sol.m_deg + 1):
                for n in range(sol.mesh.n_sp):
                    fh.write(f"{m},{n},{_fmt(sol.coeffs[m, n])}\n")
    if args.dump_system:
        _dump_system(system, str(output.with_suffix("")))
    if args.plot:
        report.render_flux_figure(output.with_suffix(".png"), xs, u_num, u_exact,
                                  title=f"{args.problem}: N={args.n}, M={args.m}")
    print(f"wrote {output}", file=sys.stderr)
    return EXIT_OK


def _make_reference(args, spec, elements):
    """Returns (flux callable, breakpoints) from exact|fixture:PATH|self:N,M."""
    ref = args.reference
    if ref == "exact":
        if spec.exact_flux is None:
            raise CliConfigError(f"problem '{args.problem}' has no exact flux; "
                                 "use --reference fixture:PATH or self:N,M")
        return (lambda x: spec.exact_flux(x=x)), spec.exact_flux.breakpoints
    if ref.startswith("fixture:"):
        fixture = analysis.load_solution_fixture(ref[len("fixture:"):])
        return (lambda x: scalar_flux_values(fixture, np.atleast_1d(x))), ()
    if ref.startswith("self:"):
        try:
            n_ref, m_ref = (int(t) for t in ref[len("self:"):].split(","))
        except ValueError:
            raise CliConfigError(f"--reference self takes 'self:N,M', got {ref!r}")
        mesh = Mesh.from_breakpoints(spec.domain, elements, n_ref)
        sol = solve_direct(assemble(spec, mesh, m_ref))
        return (lambda x: scalar_flux_values(sol, np.atleast_1d(x))), ()
    raise CliConfigError(f"--reference must be exact, fixture:PATH or self:N,M, got {ref!r}")


def _cmd_converge(args):
    spec = _load_spec(args.problem)
    if (args.sweep_n is None) == (args.sweep_m is None):
        raise CliConfigError("exactly one of --sweep-n / --sweep-m is required "
                             "(offending pair: --sweep-n with --sweep-m)")
    if args.sweep_n is not None and args.n is not None:
        raise CliConfigError("--n conflicts with --sweep-n (offending pair: --n, --sweep-n)")
    if args.sweep_m is not None and args.m is not None:
        raise CliConfigError("--m conflicts with --sweep-m (offending pair: --m, --sweep-m)")

    elements = _parse_elements(args.elements, spec)
    reference, ref_breaks = _make_reference(args, spec, elements)
    if args.sweep_n is not None:
        sweep_param, values = "N", _parse_int_list(args.sweep_n, "--sweep-n")
        fixed = {"m_deg": args.m}
        if args.m is None:
            raise CliConfigError("--sweep-n requires a fixed --m")
    else:
        sweep_param, values = "M", _parse_int_list(args.sweep_m, "--sweep-m")
        fixed = {"n_deg": args.n}
        if args.n is None:
            raise CliConfigError("--sweep-m requires a fixed --n")

    table = analysis.convergence_study(
        spec, sweep_param, values, reference=reference, ref_breakpoints=ref_breaks,
        elements=elements, threads=_thread_budget(), **fixed)

    output = Path(args.output or f"{Path(args.problem).stem}_converge.{args.format}")
    if args.format == "csv":
        output.write_text(table.to_csv())
    else:
        output.write_text(table.to_json() + "\n")
    if args.plot:
        report.render_convergence_figure(output.with_suffix(".png"), table,
                                         title=f"{args.problem} convergence")
    failed = [r for r in table.rows if r.failed]
    for r in failed:
        print(f"row {r.param} failed: {r.failed}", file=sys.stderr)
    print(f"wrote {output}", file=sys.stderr)
    return EXIT_SOLVER if len(failed) == len(table.rows) else EXIT_OK


def _cmd_list(_args):
    for name in problem.CATALOG_NAMES:
        spec = catalog(name)
        print(f"{name}: {spec.description}")
    return EXIT_OK


def _cmd_verify(args):
    spec = _load_spec(args.problem)
    status = EXIT_OK
    if spec.coercivity_c is not None:
        margin = coercivity_margin(spec)
        ok = margin >= -1e-8
        print(f"coercivity spot-check: margin {margin:.3e} "
              f"(c={spec.coercivity_c}) -> {'ok' if ok else 'FAIL'}")
        if not ok:
            status = EXIT_CONFIG
    else:
        print("coercivity spot-check: skipped (no constant declared)")
    if spec.exact_solution is not None:
        resid = solution_residual(spec)
        ok = resid <= 1e-9
        print(f"exact-solution residual: {resid:.3e} -> {'ok' if ok else 'FAIL'}")
        if not ok:
            status = EXIT_CONFIG
    else:
        print("exact-solution residual: skipped (no exact solution)")
    return status


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spectral-transport",
        description="Fully spectral 1D neutron transport solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one problem and write flux samples")
    p_solve.add_argument("--problem", required=True, help="catalog name or problem JSON path")
    p_solve.add_argument("--n", type=int, required=True, help="spatial degree per element")
    p_solve.add_argument("--m", type=int, required=True, help="angular degree (M+1 nodes)")
    p_solve.add_argument("--elements", default="auto",
                         help="'auto', 'none', or comma list of interior boundaries")
    p_solve.add_argument("--solver", choices=("direct", "source-iteration"), default="direct")
    p_solve.add_argument("--tol", type=float, default=None)
    p_solve.add_argument("--max-iter", type=int, default=None)
    p_solve.add_argument("--output", default=None)
    p_solve.add_argument("--format", choices=("csv", "json"), default="csv")
    p_solve.add_argument("--dump-coeffs", action="store_true",
                         help="also write the angular coefficient table")
    p_solve.add_argument("--dump-system", action="store_true",
                         help="debug dump of matrix, rhs and index sets as CSV")
    p_solve.add_argument("--plot", action="store_true", help="render a flux figure (PNG)")
    p_solve.set_defaults(func=_cmd_solve)

    p_conv = sub.add_parser("converge", help="run a convergence sweep")
    p_conv.add_argument("--problem", required=True)
    p_conv.add_argument("--sweep-n", default=None, help="comma list of spatial degrees")
    p_conv.add_argument("--sweep-m", default=None, help="comma list of angular degrees")
    p_conv.add_argument("--n", type=int, default=None, help="fixed spatial degree for --sweep-m")
    p_conv.add_argument("--m", type=int, default=None, help="fixed angular degree for --sweep-n")
    p_conv.add_argument("--elements", default="auto")
    p_conv.add_argument("--reference", default="exact",
                        help="exact | fixture:PATH | self:N,M")
    p_conv.add_argument("--output", default=None)
    p_conv.add_argument("--format", choices=("csv", "json"), default="csv")
    p_conv.add_argument("--plot", action="store_true", help="render a convergence figure (PNG)")
    p_conv.set_defaults(func=_cmd_converge)

    p_list = sub.add_parser("list", help="list the built-in problem catalog")
    p_list.set_defaults(func=_cmd_list)

    p_verify = sub.add_parser("verify", help="run problem-definition spot checks")
    p_verify.add_argument("--problem", required=True)
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the configuration code
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (CliConfigError, ConfigurationError, UnknownProblemError,
            FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularMatrixError, LinearSolveError, IterationFailureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands:

  verify        run the verification suite, emit a JSON report
  interpolate   interpolation convergence study over refined meshes (CSV)
  solve         solve the model problem over refined meshes (CSV)
  basis         dump the global kernel basis as JSON lines plus a
                dimension audit

Exit codes: 0 success, 1 a verification or audit check failed, 2 bad
usage, 3 numerical failure (solver breakdown or singular system).

A JSON config file can preload any long option (keys use either dashes
or underscores); explicit command line flags win.  CSV output is
deterministic for a fixed input except for the wall_ms column.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

import numpy as np

from .fields import DEFAULT_FIELD, FIELDS, get_field
from .globalspace import (
    build_constraints,
    build_global_basis,
    build_product_space,
)
from .mesh import CRISSCROSS, DIAGONAL, Triangulation, generate_square_mesh, read_mesh
from .solver import (
    StudyRow,
    assemble,
    broken_energy_product,
    error_norms,
    fit_rate,
    interpolation_study,
    solve_oracle,
    solve_system,
)
from .verify import full_suite

__all__ = ["main"]

_PATTERNS = {"diagonal": DIAGONAL, "crisscross": CRISSCROSS}

CSV_HEADER = "mesh_m,h,dofs,l2_err,rot_err,div_err,energy_err"
CSV_HEADER_SOLVE = CSV_HEADER + ",cg_iters,wall_ms"


def _load_mesh(args) -> list[Triangulation]:
    if args.mesh_file:
        return [read_mesh(args.mesh_file)]
    ms = _parse_refinements(args.refinements) if hasattr(args, "refinements") else [args.mesh_m]
    pattern = _PATTERNS[args.pattern]
    return [generate_square_mesh(m, pattern) for m in ms]


def _parse_refinements(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        ms = [int(tok) for tok in str(value).split(",") if tok.strip()]
    except ValueError:
        raise SystemExit(2)
    if not ms:
        raise SystemExit(2)
    return ms


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _csv_row(m: int, row: StudyRow, solve: bool) -> str:
    e = row.errors
    base = (
        f"{m},{row.h:.12g},{row.dofs},{e['l2']:.12e},{e['rot']:.12e},"
        f"{e['div']:.12e},{e['energy']:.12e}"
    )
    if solve:
        base += f",{row.cg_iters},{row.wall_ms:.3f}"
    return base


def cmd_verify(args) -> int:
    checks = full_suite(
        seed=args.seed, norm_count=args.simplices, triangle_count=args.triangles
    )
    failed = [c for c in checks if not c.passed]
    report = {
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
        "passed": len(checks) - len(failed),
        "failed": len(failed),
    }
    out, close = _open_out(args.out)
    try:
        json.dump(report, out, indent=2)
        out.write("\n")
    finally:
        if close:
            out.close()
    for c in failed:
        print(c.line(), file=sys.stderr)
    return 1 if failed else 0


def cmd_interpolate(args) -> int:
    field = get_field(args.field)
    ms = _parse_refinements(args.refinements)
    pattern = _PATTERNS[args.pattern]
    rows = interpolation_study(field, ms, pattern=pattern, quad_order=args.quad_order)
    out, close = _open_out(args.out)
    try:
        out.write(CSV_HEADER + "\n")
        for m, row in zip(ms, rows):
            out.write(_csv_row(m, row, solve=False) + "\n")
    finally:
        if close:
            out.close()
    if len(rows) >= 2:
        print(f"fitted energy rate: {fit_rate(rows):.4f}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    field = get_field(args.field)
    ms = _parse_refinements(args.refinements)
    pattern = _PATTERNS[args.pattern]
    rows: list[StudyRow] = []
    status = 0
    out, close = _open_out(args.out)
    try:
        out.write(CSV_HEADER_SOLVE + "\n")
        for m in ms:
            t0 = time.perf_counter()
            tri = generate_square_mesh(m, pattern)
            prod = build_product_space(tri)
            basis = build_global_basis(tri, prod)
            system = assemble(tri, field, quad_order=args.quad_order, prod=prod, basis=basis)
            result = solve_system(system, tol=args.tol)
            wall_ms = (time.perf_counter() - t0) * 1000.0
            errs = error_norms(result.u_cell, prod, field, quad_order=args.quad_order)
            row = StudyRow(
                m, tri.h, len(basis), errs, cg_iters=result.iterations, wall_ms=wall_ms
            )
            rows.append(row)
            out.write(_csv_row(m, row, solve=True) + "\n")
            run_oracle = args.oracle == "on" or (args.oracle == "auto" and m <= 4)
            if run_oracle:
                cons = build_constraints(tri, prod)
                oracle = solve_oracle(system, cons)
                diff = oracle.x_cell - result.u_cell
                gap = np.sqrt(
                    max(broken_energy_product(diff, diff, prod), 0.0)
                    / max(broken_energy_product(oracle.x_cell, oracle.x_cell, prod), 1e-300)
                )
                print(
                    f"oracle m={m}: energy gap {gap:.3e}, constraint residual "
                    f"{oracle.constraint_residual:.3e}",
                    file=sys.stderr,
                )
                if gap > 1e-8 or oracle.constraint_residual > 1e-10:
                    status = 1
    finally:
        if close:
            out.close()
    if len(rows) >= 2:
        print(f"fitted energy rate: {fit_rate(rows):.4f}", file=sys.stderr)
    return status


def cmd_basis(args) -> int:
    tri = _load_mesh(args)[0]
    prod = build_product_space(tri)
    cons = build_constraints(tri, prod)
    basis = build_global_basis(tri, prod, cons)
    out, close = _open_out(args.out)
    try:
        for fn in basis.functions:
            out.write(
                json.dumps(
                    {
                        "category": fn.category,
                        "anchor": fn.anchor,
                        "cells": list(fn.cells),
                        "entries": [[idx, str(val)] for idx, val in fn.entries],
                    }
                )
                + "\n"
            )
        rank = cons.rank()
        nullity = prod.dim - rank
        audit = {
            "cells": len(tri.cells),
            "vertices": len(tri.vertices),
            "interior_vertices": len(tri.interior_vertices),
            "product_dim": prod.dim,
            "constraint_rows": cons.rows,
            "rank": rank,
            "nullity": nullity,
            "basis_count": len(basis),
            "counts": basis.counts(),
            "count_matches_nullity": len(basis) == nullity,
        }
        out.write(json.dumps({"audit": audit}) + "\n")
    finally:
        if close:
            out.close()
    return 0 if len(basis) == nullity else 1


def _add_mesh_flags(p, refinements_default):
    p.add_argument("--pattern", choices=sorted(_PATTERNS), default="diagonal")
    p.add_argument(
        "--refinements",
        default=refinements_default,
        help="comma separated mesh parameters, e.g. 2,4,8,16",
    )
    p.add_argument("--quad-order", type=int, default=6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hodgefem",
        description="Nonconforming finite elements for fields with rot and div control",
    )
    parser.add_argument("--config", help="JSON file preloading any long option")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the verification suite (JSON report)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--simplices", type=int, default=100, help="simplices per norm check")
    p.add_argument("--triangles", type=int, default=1000, help="triangles for unisolvence")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("interpolate", help="interpolation convergence study (CSV)")
    p.add_argument("--field", choices=sorted(FIELDS), default=DEFAULT_FIELD)
    _add_mesh_flags(p, "2,4,8,16")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("solve", help="solve the model problem (CSV)")
    p.add_argument("--field", choices=sorted(FIELDS), default=DEFAULT_FIELD)
    _add_mesh_flags(p, "4,8,16,32")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument(
        "--oracle",
        choices=["auto", "on", "off"],
        default="auto",
        help="run the saddle-point cross-check (auto: meshes with m <= 4)",
    )
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("basis", help="dump the global basis (JSON lines + audit)")
    p.add_argument("--mesh-m", type=int, default=4)
    p.add_argument("--mesh-file", help="read the mesh from a file instead")
    p.add_argument("--pattern", choices=sorted(_PATTERNS), default="diagonal")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_basis)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    with open(path) as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise SystemExit(2)
    defaults = {str(k).replace("-", "_"): v for k, v in cfg.items()}
    # reach every subparser so the defaults apply regardless of command
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                sp.set_defaults(**defaults)
    parser.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error reading config: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

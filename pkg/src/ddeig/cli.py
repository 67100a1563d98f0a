"""``ddeig`` command line: matrix utilities and the comparison sweeps.

Matrix arguments are ``.ddm`` files, or plain whitespace separated dense
matrices (any other extension) which are converted with
:func:`ddeig.ddrep.from_entries`.

Exit codes
----------
0 success, 1 other library error, 2 usage error (argparse),
3 not diagonally dominant, 4 singular factor, 5 no convergence,
6 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import List, Optional

import numpy as np

from .aldu import PivotStrategy, factorize, factorize_tridiag
from .ddrep import DDMatrix, from_entries, read_ddm
from .eigs import InverseOperator, inverse_iteration, lanczos_inverse
from .exceptions import (
    DDEigError,
    DDMParseError,
    NoConvergenceWarning,
    NotDiagonallyDominant,
    SingularFactor,
    ZeroPivot,
)
from .experiments import (
    DEFAULT_K,
    RunOptions,
    crossover_from_rows,
    crossover_to_csv,
    rows_to_csv,
    run_table,
    to_json,
)
from .solve import solve_ldu

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_DD = 3
EXIT_SINGULAR = 4
EXIT_NO_CONVERGENCE = 5
EXIT_INPUT = 6


def load_matrix(path: str) -> DDMatrix:
    if path.endswith(".ddm"):
        return read_ddm(path)
    try:
        a = np.loadtxt(path, ndmin=2)
    except ValueError as exc:
        raise DDMParseError(str(exc), path=path) from None
    return from_entries(a)


def _factor(m: DDMatrix, pivot: str):
    """O(n) path for symmetric tridiagonal input without pivoting, dense otherwise."""
    strategy = PivotStrategy.parse(pivot)
    if m.storage == "tridiag" and strategy is PivotStrategy.NONE:
        return factorize_tridiag(m)
    return factorize(m.as_dense_storage(), strategy)


def _floats(a) -> list:
    return [float(x) for x in np.asarray(a).ravel()]


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def cmd_factor(args) -> int:
    m = load_matrix(args.matrix)
    f = _factor(m, args.pivot)
    doc = {"n": m.n, "rank": f.rank, "d": _floats(f.d)}
    if hasattr(f, "sub"):
        doc.update(strategy="none", perm=list(range(m.n)), L_subdiag=_floats(f.sub))
    else:
        doc.update(
            strategy=f.strategy.value,
            perm=[int(i) for i in f.perm],
            L=np.asarray(f.L).tolist(),
            U=np.asarray(f.U).tolist(),
        )
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    m = load_matrix(args.matrix)
    try:
        b = np.loadtxt(args.rhs, ndmin=1)
    except ValueError as exc:
        raise DDMParseError(str(exc), path=args.rhs) from None
    if b.shape != (m.n,):
        raise DDMParseError(f"right-hand side has {b.size} entries, matrix has n={m.n}", path=args.rhs)
    x = solve_ldu(_factor(m, args.pivot), b)
    _emit(json.dumps({"n": m.n, "x": _floats(x)}, indent=2), args.out)
    return EXIT_OK


def cmd_eig(args) -> int:
    m = load_matrix(args.matrix)
    op = InverseOperator.from_factors(_factor(m, args.pivot), args.scale)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        if args.driver == "lanczos":
            steps = min(m.n, max(args.maxit, args.nev))
            results = lanczos_inverse(op, nev=args.nev, tol_mult=args.tol_mult, max_steps=steps)
        else:
            if args.nev != 1:
                raise ValueError("inverse iteration computes one eigenpair; use --driver lanczos")
            results = [inverse_iteration(op, tol_mult=args.tol_mult, maxit=args.maxit)]
    doc = [
        {
            "eigenvalue": r.eigenvalue,
            "rho": r.rho,
            "residual": r.residual,
            "iterations": r.iterations,
            "converged": r.converged,
            "driver": r.driver,
            **({"vector": _floats(r.vector)} if args.vectors else {}),
        }
        for r in results
    ]
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NO_CONVERGENCE


def cmd_table(args) -> int:
    kmin, kmax = DEFAULT_K[args.command]
    kmin = kmin if args.kmin is None else args.kmin
    kmax = kmax if args.kmax is None else args.kmax
    if kmin > kmax:
        raise ValueError("--kmin must not exceed --kmax")
    opts = RunOptions(
        driver=args.driver,
        tol_mult=args.tol_mult,
        maxit=args.maxit,
        rho=args.rho,
        pivot=PivotStrategy.parse(args.pivot),
        timing=not args.no_timing,
    )
    rows = run_table(args.command, kmin, kmax, opts)
    if args.command == "crossover":
        rows = crossover_from_rows(rows)
        text = to_json(rows) if args.format == "json" else crossover_to_csv(rows)
    else:
        text = to_json(rows) if args.format == "json" else rows_to_csv(rows, args.command, opts)
    _emit(text, args.out)
    return EXIT_OK


def _positive(kind):
    def parse(s):
        x = kind(s)
        if x <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return x

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddeig", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    pivot = argparse.ArgumentParser(add_help=False)
    pivot.add_argument("--pivot", choices=["none", "diag", "cdd"], default="diag")
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="write here instead of stdout")
    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--driver", choices=["invit", "lanczos"], default="invit")
    solver.add_argument("--tol-mult", type=_positive(float), default=1.0)
    solver.add_argument("--maxit", type=_positive(int), default=500,
                        help="iteration cap (Lanczos: step cap)")

    s = sub.add_parser("factor", parents=[pivot, out], help="accurate LDU factors as JSON")
    s.add_argument("matrix")
    s.set_defaults(func=cmd_factor)

    s = sub.add_parser("solve", parents=[pivot, out], help="solve A x = b")
    s.add_argument("matrix")
    s.add_argument("rhs", help="text file with n numbers")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("eig", parents=[pivot, out, solver], help="smallest eigenvalue(s)")
    s.add_argument("matrix")
    s.add_argument("--nev", type=_positive(int), default=1)
    s.add_argument("--scale", type=_positive(float), default=1.0,
                   help="report eigenvalues of scale * A")
    s.add_argument("--vectors", action="store_true", help="include eigenvectors")
    s.set_defaults(func=cmd_eig)

    for name, what in [
        ("table1", "periodic 2-D Laplacian, rho = 1e-8"),
        ("table2", "beam with natural boundary conditions"),
        ("table3", "clamped beam, standard vs product discretization"),
        ("crossover", "discretization vs computation error, simply supported beam"),
    ]:
        kmin, kmax = DEFAULT_K[name]
        s = sub.add_parser(name, parents=[pivot, out, solver], help=f"{what} (k = {kmin}..{kmax})")
        s.add_argument("--kmin", type=int)
        s.add_argument("--kmax", type=int)
        s.add_argument("--rho", type=float, help="coefficient rho (table1, table2)")
        s.add_argument("--format", choices=["csv", "json"], default="csv")
        s.add_argument("--no-timing", action="store_true",
                       help="write 0 in the ms columns so reruns are byte identical")
        s.set_defaults(func=cmd_table)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    codes = [
        (NotDiagonallyDominant, EXIT_NOT_DD),
        ((SingularFactor, ZeroPivot), EXIT_SINGULAR),
        ((DDMParseError, OSError, ValueError), EXIT_INPUT),
        (DDEigError, EXIT_ERROR),
    ]
    try:
        return args.func(args)
    except (DDEigError, OSError, ValueError) as exc:
        print(f"ddeig: {type(exc).__name__}: {exc}", file=sys.stderr)
        return next(code for kinds, code in codes if isinstance(exc, kinds))


if __name__ == "__main__":
    sys.exit(main())

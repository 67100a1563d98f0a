"""Sweeps over ``h = 2**-k`` comparing the Cholesky baseline with the accurate path.

Each row runs both solver paths on the same grid and reports the computed
smallest eigenvalue, its relative error against the continuous operator's
``lambda_1``, iteration counts, final residuals and wall times. A failure on
one path (for instance a Cholesky pivot that is not positive) is recorded in
that path's cells and never aborts the sweep.

The number of rows run concurrently is capped by ``DDEIG_THREADS``
(default 1). Output is always ordered by ``k``.
"""

from __future__ import annotations

import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional

from .aldu import PivotStrategy, factorize
from .discretize import (
    GridSpec,
    ProblemSpec,
    build_beam_natural,
    build_biharmonic_dirichlet_product,
    build_biharmonic_dirichlet_standard,
    build_biharmonic_ss,
    build_laplace2d_periodic,
    discrete_lambda,
    laplace2d_periodic_dense,
    operator_lambda,
    t_squared_banded,
)
from .eigs import EigResult, InverseOperator, inverse_iteration, lanczos_inverse
from .exceptions import DDEigError, NoConvergenceWarning
from .solve import chol_factorize

CSV_HEADER = (
    "h,n,mu_chol,relerr_chol,mu_aldu,relerr_aldu,"
    "iters_chol,iters_aldu,res_chol,res_aldu,ms_chol,ms_aldu"
)
CROSSOVER_HEADER = "k,h,n,disc_err,comp_err_chol,overall_err_chol,comp_err_aldu,overall_err_aldu"
FAIL = "-"

TABLES = {
    "table1": "laplace2d_periodic",
    "table2": "beam_natural",
    "table3": "biharmonic1d_dirichlet_product",
    "crossover": "biharmonic1d_ss",
}
DEFAULT_K = {"table1": (3, 5), "table2": (7, 16), "table3": (4, 18), "crossover": (3, 16)}
DEFAULT_RHO = {"table1": 1e-8, "table2": 1.0}


@dataclass
class PathResult:
    """Outcome of one solver path on one grid; ``error`` set on failure."""

    mu: Optional[float] = None
    relerr: Optional[float] = None
    iters: Optional[int] = None
    residual: Optional[float] = None
    ms: float = 0.0
    converged: bool = False
    error: Optional[str] = None


@dataclass
class ExperimentRow:
    k: int
    h: float
    n: int
    chol: PathResult
    aldu: PathResult
    variant: str = ""


@dataclass(frozen=True)
class RunOptions:
    """Flags shared by every row of a sweep."""

    driver: str = "invit"
    tol_mult: float = 1.0
    maxit: int = 500
    rho: Optional[float] = None  # None: the experiment's own default
    pivot: PivotStrategy = PivotStrategy.DIAGONAL
    timing: bool = True

    def __post_init__(self):
        if self.driver not in ("invit", "lanczos"):
            raise ValueError(f"unknown driver {self.driver!r}")


# --- operators per experiment -------------------------------------------------


BASELINE_VARIANT = {"table1": "dense", "table2": "banded", "table3": "banded", "crossover": "banded"}


def baseline_operator(table: str, grid: GridSpec, opts: RunOptions) -> InverseOperator:
    """Cholesky inverse of the conventionally assembled matrix (see ``BASELINE_VARIANT``)."""
    h = grid.h
    if table == "table1":
        a = laplace2d_periodic_dense(ProblemSpec("laplace2d_periodic", grid, rho_for(table, opts)))
        return InverseOperator.from_cholesky(chol_factorize(a), 1.0)
    if table == "table2":
        b = t_squared_banded(grid.N, h * h * rho_for(table, opts))
        return InverseOperator.from_cholesky(chol_factorize(b), h**-4)
    if table == "table3":
        b = build_biharmonic_dirichlet_standard(ProblemSpec("biharmonic1d_dirichlet_standard", grid))
        return InverseOperator.from_cholesky(chol_factorize(b), h**-4)
    if table == "crossover":
        return InverseOperator.from_cholesky(chol_factorize(t_squared_banded(grid.N)), h**-4)
    raise ValueError(f"unknown experiment {table!r}")


def accurate_operator(table: str, grid: GridSpec, opts: RunOptions) -> InverseOperator:
    """Inverse through accurate factors (single, product or deflated)."""
    if table == "table1":
        m = build_laplace2d_periodic(ProblemSpec("laplace2d_periodic", grid, rho_for(table, opts)))
        return InverseOperator.from_factors(factorize(m, opts.pivot), grid.h**-2)
    if table == "table2":
        return InverseOperator.from_product(build_beam_natural(ProblemSpec("beam_natural", grid, rho_for(table, opts))))
    if table == "table3":
        d = build_biharmonic_dirichlet_product(ProblemSpec("biharmonic1d_dirichlet_product", grid))
        return InverseOperator.from_deflated(d)
    if table == "crossover":
        return InverseOperator.from_product(build_biharmonic_ss(ProblemSpec("biharmonic1d_ss", grid)))
    raise ValueError(f"unknown experiment {table!r}")


def grid_for(table: str, k: int) -> GridSpec:
    if table == "table1":
        return GridSpec.from_k(k, dims=2)
    return GridSpec.from_k(k)


def reference_for(table: str, opts: RunOptions) -> float:
    return operator_lambda(TABLES[table], rho_for(table, opts))


# --- running ------------------------------------------------------------------


def run_driver(op: InverseOperator, opts: RunOptions) -> EigResult:
    if opts.driver == "invit":
        return inverse_iteration(op, tol_mult=opts.tol_mult, maxit=opts.maxit)
    if opts.driver == "lanczos":
        return lanczos_inverse(op, tol_mult=opts.tol_mult, max_steps=min(op.dim, max(opts.maxit, 1)))[0]
    raise ValueError(f"unknown driver {opts.driver!r}")


def rho_for(table: str, opts: RunOptions) -> float:
    """``rho`` used by ``table``; only tables 1 and 2 take one."""
    if table not in DEFAULT_RHO:
        return 1.0
    return DEFAULT_RHO[table] if opts.rho is None else float(opts.rho)


def _run_path(make: Callable[[], InverseOperator], ref: float, opts: RunOptions) -> PathResult:
    t0 = time.perf_counter()
    try:
        op = make()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoConvergenceWarning)
            r = run_driver(op, opts)
    except (DDEigError, ArithmeticError, ValueError) as exc:
        return PathResult(error=f"{type(exc).__name__}: {exc}")
    ms = (time.perf_counter() - t0) * 1e3 if opts.timing else 0.0
    return PathResult(
        mu=r.eigenvalue,
        relerr=abs(r.eigenvalue - ref) / abs(ref),
        iters=r.iterations,
        residual=r.residual / abs(r.rho),
        ms=ms,
        converged=r.converged,
    )


def run_row(table: str, k: int, opts: RunOptions = RunOptions()) -> ExperimentRow:
    """Both solver paths for one ``k``."""
    grid = grid_for(table, k)
    ref = reference_for(table, opts)
    chol = _run_path(lambda: baseline_operator(table, grid, opts), ref, opts)
    aldu = _run_path(lambda: accurate_operator(table, grid, opts), ref, opts)
    n = (grid.N + 1) ** 2 if table == "table1" else grid.N
    return ExperimentRow(k, grid.h, n, chol, aldu, BASELINE_VARIANT[table])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DDEIG_THREADS", "1")))
    except ValueError:
        return 1


def run_table(table: str, kmin: int, kmax: int, opts: RunOptions = RunOptions()) -> List[ExperimentRow]:
    """Rows for ``k = kmin..kmax`` in order of ``k``."""
    if table not in TABLES:
        raise ValueError(f"unknown experiment {table!r}")
    ks = list(range(kmin, kmax + 1))
    workers = min(_threads(), max(len(ks), 1))
    if workers == 1:
        return [run_row(table, k, opts) for k in ks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda k: run_row(table, k, opts), ks))


# --- crossover sweep -------------------------------------------------------------


@dataclass
class CrossoverRow:
    k: int
    h: float
    n: int
    disc_err: float
    comp_err_chol: Optional[float]
    overall_err_chol: Optional[float]
    comp_err_aldu: Optional[float]
    overall_err_aldu: Optional[float]


def crossover_from_rows(rows: List[ExperimentRow]) -> List[CrossoverRow]:
    """Split ``|mu - lambda_1|`` into discretization and computation parts."""
    lam = operator_lambda("biharmonic1d_ss")
    out = []
    for r in rows:
        lam_h = discrete_lambda("biharmonic1d_ss", r.h)

        def parts(p: PathResult):
            if p.mu is None:
                return None, None
            return abs(p.mu - lam_h), abs(p.mu - lam)

        cc, oc = parts(r.chol)
        ca, oa = parts(r.aldu)
        out.append(CrossoverRow(r.k, r.h, r.n, abs(lam_h - lam), cc, oc, ca, oa))
    return out


def run_crossover(kmin: int, kmax: int, opts: RunOptions = RunOptions()) -> List[CrossoverRow]:
    return crossover_from_rows(run_table("crossover", kmin, kmax, opts))


# --- formatting -------------------------------------------------------------------


def _num(x) -> str:
    if x is None:
        return FAIL
    if isinstance(x, int):
        return str(x)
    return f"{x:.17e}"


def rows_to_csv(rows: List[ExperimentRow], table: str, opts: RunOptions) -> str:
    variants = sorted({r.variant for r in rows if r.variant}) or [FAIL]
    lines = [
        f"# experiment={table} kind={TABLES[table]} baseline=cholesky-{'/'.join(variants)} "
        f"driver={opts.driver} tol_mult={opts.tol_mult!r} rho={rho_for(table, opts)!r}",
        CSV_HEADER,
    ]
    for r in rows:
        c, a = r.chol, r.aldu
        lines.append(",".join([
            f"{r.h:.17e}", str(r.n),
            _num(c.mu), _num(c.relerr), _num(a.mu), _num(a.relerr),
            _num(c.iters), _num(a.iters), _num(c.residual), _num(a.residual),
            f"{c.ms:.3f}" if c.error is None else FAIL,
            f"{a.ms:.3f}" if a.error is None else FAIL,
        ]))
    return "\n".join(lines) + "\n"


def crossover_to_csv(rows: List[CrossoverRow]) -> str:
    lines = ["# experiment=crossover kind=biharmonic1d_ss baseline=cholesky-banded", CROSSOVER_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.k), f"{r.h:.17e}", str(r.n), _num(r.disc_err),
            _num(r.comp_err_chol), _num(r.overall_err_chol),
            _num(r.comp_err_aldu), _num(r.overall_err_aldu),
        ]))
    return "\n".join(lines) + "\n"


def to_json(rows) -> str:
    def clean(obj):
        if isinstance(obj, float) and not math.isfinite(obj):
            return None
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        return obj

    return json.dumps([clean(asdict(r)) for r in rows], indent=2)

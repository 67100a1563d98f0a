"""Finite difference operators on a uniform grid of ``[0, 1]`` (or its square).

Every builder returns the operator *without* its mesh factor (``h**-2`` or
``h**-4``); the factor travels separately as ``scale`` so the integer stencils
stay exact and the dominance parts stay clean. With ``N + 1`` a power of two
the scale is a power of two and rescaling eigenvalues is exact.

Kinds understood by :func:`build_problem` and the CLI:

``laplace2d_periodic``
    ``-Laplace u + rho u`` on the periodic unit square (5-point).
``biharmonic1d_ss`` / ``biharmonic2d_ss``
    ``Laplace^2`` with simply supported ends, ``h^-4 T^2``.
``beam_natural``
    ``u'''' - rho(x) u''`` with ``u = u'' = 0`` ends, ``h^-4 (T + h^2 D) T``.
``biharmonic1d_dirichlet_standard``
    clamped ``u''''`` with the usual pentadiagonal stencil (not diagonally dominant).
``biharmonic1d_dirichlet_product``
    clamped ``u''''`` discretized as ``h^-4 S_N T_N``; has a spurious zero eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .aldu import PivotStrategy, factorize, factorize_tridiag
from .ddrep import DDMatrix, tridiag_from_parts
from .eigs import DeflatedOperator
from .exceptions import NegativeCoefficient, SingularOperator, UnsupportedKind
from .solve import ProductOperator, SymBanded

KINDS = (
    "laplace2d_periodic",
    "biharmonic1d_ss",
    "biharmonic2d_ss",
    "beam_natural",
    "biharmonic1d_dirichlet_standard",
    "biharmonic1d_dirichlet_product",
)

# smallest eigenvalue of the clamped 1-D biharmonic operator, 50 digits
CLAMPED_LAMBDA1 = "500.56390174043259597023906145469523385520808092739"


@dataclass(frozen=True)
class GridSpec:
    """``N`` interior points per direction, mesh size ``h = 1 / (N + 1)``."""

    N: int
    dims: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("a grid needs N >= 2 interior points")
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")

    @classmethod
    def from_k(cls, k: int, dims: int = 1) -> "GridSpec":
        """Grid with ``h = 2**-k``."""
        return cls(2**k - 1, dims)

    @property
    def h(self) -> float:
        return 1.0 / (self.N + 1)


Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    grid: GridSpec
    rho: Coefficient = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKind(f"unknown problem kind {self.kind!r}")

    def sample_rho(self) -> np.ndarray:
        """``rho`` at the interior nodes ``x_i = i h``."""
        x = np.arange(1, self.grid.N + 1) * self.grid.h
        if callable(self.rho):
            vals = np.asarray(self.rho(x), dtype=float) * np.ones_like(x)
        else:
            vals = np.full_like(x, float(self.rho))
        if np.any(vals < 0):
            raise NegativeCoefficient("rho must be nonnegative on the grid")
        return vals


# --- basic matrices ----------------------------------------------------------


def build_tn(N: int) -> DDMatrix:
    """``tridiag(-1, 2, -1)`` of order ``N``; dominance parts ``(1, 0, ..., 0, 1)``."""
    if N < 1:
        raise ValueError("N must be positive")
    v = np.zeros(N)
    v[0] += 1.0
    v[-1] += 1.0
    return tridiag_from_parts(-np.ones(N - 1), v)


def build_sn(N: int) -> DDMatrix:
    """``T_N`` with both corner diagonals replaced by 1; every row sums to zero."""
    if N < 2:
        raise ValueError("N must be at least 2")
    return tridiag_from_parts(-np.ones(N - 1), np.zeros(N))


def build_en(N: int) -> DDMatrix:
    """``T_N - S_N``: ones at ``(1, 1)`` and ``(N, N)``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    v = np.zeros(N)
    v[[0, -1]] = 1.0
    return tridiag_from_parts(np.zeros(N - 1), v)


def _kron_sum_dd(m: DDMatrix) -> DDMatrix:
    """``M (x) I + I (x) M`` in dominance-parts form (dense storage)."""
    n = m.n
    off = m.dense_offdiag()
    eye = np.eye(n)
    big = np.kron(off, eye) + np.kron(eye, off)
    v = np.add.outer(m.v, m.v).ravel()
    return DDMatrix(big, v, "dense")


def build_t2d(N: int) -> DDMatrix:
    """``T_N (x) I + I (x) T_N`` (2-D Dirichlet 5-point Laplacian, unscaled)."""
    return _kron_sum_dd(build_tn(N))


def build_periodic_t(m: int) -> DDMatrix:
    """``tridiag(-1, 2, -1)`` of order ``m`` with ``-1`` in the two corners."""
    if m < 3:
        raise ValueError("periodic grid needs at least 3 points")
    off = np.zeros((m, m))
    idx = np.arange(m)
    off[idx, (idx + 1) % m] = -1.0
    off[idx, (idx - 1) % m] = -1.0
    return DDMatrix(off, np.zeros(m), "dense")


def build_laplace2d_periodic(spec: ProblemSpec) -> DDMatrix:
    """``h^2 A_h = That (x) I + I (x) That + rho h^2 I`` on ``(N+1)^2`` unknowns.

    The smallest eigenvalue of ``A_h`` is ``rho`` with the constant vector.
    """
    if callable(spec.rho):
        raise ValueError("the periodic example takes a constant rho")
    rho = float(spec.rho)
    if rho < 0:
        raise NegativeCoefficient("rho must be nonnegative")
    if rho == 0:
        raise SingularOperator("rho = 0 leaves the periodic Laplacian singular")
    h = spec.grid.h
    lap = _kron_sum_dd(build_periodic_t(spec.grid.N + 1))
    return DDMatrix(lap.offdiag, lap.v + rho * h * h, "dense")


def laplace2d_periodic_dense(spec: ProblemSpec) -> np.ndarray:
    """Conventionally assembled ``h^-2 (That (x) I + I (x) That) + rho I`` (baseline)."""
    h = spec.grid.h
    m = spec.grid.N + 1
    t = build_periodic_t(m).to_dense()
    eye = np.eye(m)
    return (np.kron(t, eye) + np.kron(eye, t)) / (h * h) + float(spec.rho) * np.eye(m * m)


# --- fourth order operators ---------------------------------------------------


def build_biharmonic_ss(spec: ProblemSpec) -> ProductOperator:
    """Simply supported biharmonic ``h^-4 T^2`` as a product of two equal factors."""
    h = spec.grid.h
    if spec.grid.dims == 1:
        m = build_tn(spec.grid.N)
        f = factorize_tridiag(m)
    else:
        m = build_t2d(spec.grid.N)
        f = factorize(m, PivotStrategy.NONE)
    return ProductOperator([f, f], h**-4, [m, m], gamma_hint=1.0)


def build_beam_natural(spec: ProblemSpec, rho_fn: Optional[Coefficient] = None) -> ProductOperator:
    """``h^-4 (T_N + h^2 D) T_N`` with ``D = diag(rho(i h))``."""
    if rho_fn is not None:
        spec = ProblemSpec(spec.kind, spec.grid, rho_fn)
    h = spec.grid.h
    rho = spec.sample_rho()
    tn = build_tn(spec.grid.N)
    shifted = tridiag_from_parts(tn.offdiag, tn.v + (h * h) * rho)
    return ProductOperator(
        [factorize_tridiag(shifted), factorize_tridiag(tn)], h**-4, [shifted, tn]
    )


def t_squared_banded(N: int, shift: float = 0.0) -> SymBanded:
    """Assembled ``T_N^2 + shift * T_N`` (pentadiagonal) for the Cholesky baseline."""
    if N < 3:
        raise ValueError("N must be at least 3")
    main = np.full(N, 6.0)
    main[0] = main[-1] = 5.0
    sub1 = np.full(N - 1, -4.0)
    if shift:
        main = main + 2.0 * shift
        sub1 = sub1 - shift
    return SymBanded.from_diagonals([main, sub1, np.ones(N - 2)])


def build_biharmonic_dirichlet_standard(spec: ProblemSpec) -> SymBanded:
    """Standard clamped stencil ``(1, -4, 6, -4, 1)`` with corner diagonals 7 (scale ``h^-4``)."""
    N = spec.grid.N
    if N < 4:
        raise ValueError("the standard clamped stencil needs N >= 4")
    main = np.full(N, 6.0)
    main[0] = main[-1] = 7.0
    return SymBanded.from_diagonals([main, np.full(N - 1, -4.0), np.ones(N - 2)])


def build_biharmonic_dirichlet_product(spec: ProblemSpec) -> DeflatedOperator:
    """Clamped product form ``h^-4 S_N T_N``, deflated to the complement of ``T_N^{-1} e``."""
    N = spec.grid.N
    if N < 3:
        raise ValueError("the product clamped discretization needs N >= 3")
    tn, sn = build_tn(N), build_sn(N)
    return DeflatedOperator.build(factorize_tridiag(tn), factorize_tridiag(sn), spec.grid.h**-4, tn, sn)


# --- reference eigenvalues ----------------------------------------------------


def _canon(kind: str) -> str:
    if kind == "biharmonic1d_dirichlet":
        return "biharmonic1d_dirichlet_product"
    if kind not in KINDS:
        raise UnsupportedKind(f"unknown problem kind {kind!r}")
    return kind


def operator_lambda(kind: str, rho: float = 1.0) -> float:
    """Smallest eigenvalue of the differential operator itself."""
    kind = _canon(kind)
    pi = math.pi
    if kind == "laplace2d_periodic":
        return float(rho)
    if kind == "biharmonic1d_ss":
        return pi**4
    if kind == "biharmonic2d_ss":
        return 4 * pi**4
    if kind == "beam_natural":
        return pi**4 + rho * pi**2
    return float(CLAMPED_LAMBDA1)


def discrete_lambda(kind: str, h: float, rho: float = 1.0) -> float:
    """Closed-form smallest eigenvalue of the discrete operator.

    Raises :class:`UnsupportedKind` for the clamped kinds, which have none.
    """
    kind = _canon(kind)
    s2 = math.sin(math.pi * h / 2) ** 2
    if kind == "laplace2d_periodic":
        return float(rho)
    if kind == "biharmonic1d_ss":
        return 16 * s2 * s2 / h**4
    if kind == "biharmonic2d_ss":
        return 64 * s2 * s2 / h**4
    if kind == "beam_natural":
        # T_N and T_N + rho h^2 I share eigenvectors: theta (theta + rho h^2) / h^4
        return (16 * s2 * s2 + 4 * rho * h * h * s2) / h**4
    raise UnsupportedKind(f"no closed-form discrete eigenvalue for {kind!r}")


def reference_lambda(kind: str, h: Optional[float] = None, rho: float = 1.0) -> float:
    """Exact discrete eigenvalue where a closed form exists, else the operator's ``lambda_1``."""
    try:
        if h is None:
            raise UnsupportedKind(kind)
        return discrete_lambda(kind, h, rho)
    except UnsupportedKind:
        return operator_lambda(kind, rho)


def build_problem(spec: ProblemSpec):
    """Dispatch on ``spec.kind`` to the matching builder."""
    builders = {
        "laplace2d_periodic": build_laplace2d_periodic,
        "biharmonic1d_ss": build_biharmonic_ss,
        "biharmonic2d_ss": build_biharmonic_ss,
        "beam_natural": build_beam_natural,
        "biharmonic1d_dirichlet_standard": build_biharmonic_dirichlet_standard,
        "biharmonic1d_dirichlet_product": build_biharmonic_dirichlet_product,
    }
    return builders[spec.kind](spec)

"""Linear solves: accurate (through LDU factors) and conventional (Cholesky).

The accurate path solves ``L y = b``, ``D z = y``, ``U x = z`` with factors
from :mod:`ddeig.aldu`. For a product ``A = A_1 A_2 ... A_k`` of diagonally
dominant matrices the solves are chained, which keeps the error of order
``u * gamma * ||A^-1|| ||b||`` with ``gamma = prod ||A_i^-1|| / ||A^-1||``.

The Cholesky routines are the usual backward stable baseline, kept only for
comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.linalg import blas

from .aldu import LDLTFactors, LDUFactors
from .exceptions import NotPositiveDefinite, SingularFactor

Factors = Union[LDUFactors, LDLTFactors]


def _bidiag_band(sub):
    n = sub.shape[0] + 1
    ab = np.zeros((2, n))
    ab[0] = 1.0
    ab[1, :-1] = sub
    return ab


def solve_ldu(f: Factors, b, trans: bool = False) -> np.ndarray:
    """Solve ``A x = b`` (or ``A^T x = b``) from accurate factors of ``A``.

    Raises :class:`SingularFactor` if any ``d_k`` is zero.

    Examples
    --------
    >>> from ddeig.discretize import build_tn
    >>> from ddeig.aldu import factorize_tridiag
    >>> solve_ldu(factorize_tridiag(build_tn(3)), [1.0, 1.0, 1.0])
    array([1.5, 2. , 1.5])
    """
    b = np.array(b, dtype=float)
    if b.shape != (f.n,):
        raise ValueError(f"right-hand side must have shape ({f.n},), got {b.shape}")
    if np.any(f.d == 0):
        k = int(np.flatnonzero(f.d == 0)[0])
        raise SingularFactor(f"zero pivot d[{k}]: factorization has rank {f.rank} < {f.n}")

    if isinstance(f, LDLTFactors):
        if f.n == 1:
            return b / f.d
        ab = _bidiag_band(f.sub)
        y = blas.dtbsv(1, ab, b, lower=1, trans=0, diag=1)
        z = y / f.d
        return blas.dtbsv(1, ab, z, lower=1, trans=1, diag=1)

    signs = f.signs
    if trans:
        bp = b[f.perm]
        y = scipy.linalg.solve_triangular(f.U, bp, lower=False, trans="T", unit_diagonal=True)
        z = y / f.d
        xp = scipy.linalg.solve_triangular(f.L, z, lower=True, trans="T", unit_diagonal=True)
        x = np.empty_like(xp)
        x[f.perm] = xp
        return x if signs is None else signs * x

    if signs is not None:
        b = signs * b
    bp = b[f.perm]
    y = scipy.linalg.solve_triangular(f.L, bp, lower=True, unit_diagonal=True)
    z = y / f.d
    xp = scipy.linalg.solve_triangular(f.U, z, lower=False, unit_diagonal=True)
    x = np.empty_like(xp)
    x[f.perm] = xp
    return x


@dataclass(frozen=True, eq=False)
class ProductOperator:
    """``scale * A_1 @ A_2 @ ... @ A_k`` with each ``A_i`` accurately factorized.

    ``matrices`` optionally keeps the factored :class:`~ddeig.ddrep.DDMatrix`
    objects so the operator can also be applied forwards (for residuals).
    """

    factors: List[Factors]
    scale: float = 1.0
    matrices: Optional[list] = None
    gamma_hint: Optional[float] = None

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a product needs at least one factor")
        n = self.factors[0].n
        if any(f.n != n for f in self.factors):
            raise ValueError("all factors must have the same dimension")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be finite and positive")
        object.__setattr__(self, "factors", list(self.factors))

    @property
    def n(self) -> int:
        return self.factors[0].n

    def matvec(self, x, scaled: bool = True) -> np.ndarray:
        """Apply the product forwards (needs ``matrices``)."""
        if self.matrices is None:
            raise ValueError("operator was built without its matrices")
        y = np.asarray(x, dtype=float)
        for m in reversed(self.matrices):
            y = m.matvec(y)
        return self.scale * y if scaled else y


def solve_product(p: ProductOperator, b, scaled: bool = True) -> np.ndarray:
    """Solve ``(scale * A_1 ... A_k) x = b`` by chained accurate solves.

    ``A_1 w_1 = b``, ``A_2 w_2 = w_1``, ... and the scale is divided out once
    at the end (skip it with ``scaled=False``).
    """
    x = np.asarray(b, dtype=float)
    for i, f in enumerate(p.factors):
        try:
            x = solve_ldu(f, x)
        except SingularFactor as exc:
            raise SingularFactor(f"factor {i}: {exc}", factor_index=i) from exc
    return x / p.scale if scaled else x


def _inv_norm_estimate(solve, solve_t, n, steps, rng):
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(steps):
        y = solve(x)
        est = np.linalg.norm(y)
        if est == 0:
            return 0.0
        z = solve_t(y)
        x = z / np.linalg.norm(z)
    return float(est)


def estimate_gamma(p: ProductOperator, steps: int = 20, seed: int = 0) -> float:
    """Power-iteration estimate of ``prod ||A_i^-1||_2 / ||A^-1||_2``.

    Diagnostic only; the value never gates a computation.
    """
    rng = np.random.default_rng(seed)
    n = p.n
    num = 1.0
    for f in p.factors:
        num *= _inv_norm_estimate(
            lambda x, f=f: solve_ldu(f, x),
            lambda x, f=f: solve_ldu(f, x, trans=True),
            n, steps, rng,
        )

    def solve_all(x):
        return solve_product(p, x, scaled=False)

    def solve_all_t(x):
        for f in reversed(p.factors):
            x = solve_ldu(f, x, trans=True)
        return x

    den = _inv_norm_estimate(solve_all, solve_all_t, n, steps, rng)
    return num / den


# --- conventional baseline ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class SymBanded:
    """Symmetric banded matrix in LAPACK lower band storage.

    ``ab[i, j] = A[j + i, j]`` for ``0 <= i <= bandwidth``.
    """

    ab: np.ndarray

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    @classmethod
    def from_diagonals(cls, diagonals: Sequence) -> "SymBanded":
        """Build from ``[main, first_sub, second_sub, ...]`` diagonals."""
        main = np.asarray(diagonals[0], dtype=float)
        n = main.shape[0]
        ab = np.zeros((len(diagonals), n))
        for i, diag in enumerate(diagonals):
            diag = np.asarray(diag, dtype=float)
            if diag.shape != (n - i,):
                raise ValueError(f"diagonal {i} must have length {n - i}")
            ab[i, : n - i] = diag
        return cls(ab)

    def todense(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n))
        for i in range(self.bandwidth + 1):
            idx = np.arange(n - i)
            out[idx + i, idx] = self.ab[i, : n - i]
            out[idx, idx + i] = self.ab[i, : n - i]
        return out

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.n
        y = self.ab[0] * x
        for i in range(1, self.bandwidth + 1):
            band = self.ab[i, : n - i]
            y[i:] += band * x[: n - i]
            y[: n - i] += band * x[i:]
        return y


@dataclass(frozen=True, eq=False)
class CholFactors:
    """Lower Cholesky factor, dense or in lower band storage (``kind``)."""

    factor: np.ndarray
    kind: str

    @property
    def n(self) -> int:
        return self.factor.shape[1]


def chol_factorize(a) -> CholFactors:
    """Cholesky factorization of a symmetric positive definite matrix.

    ``a`` is a dense square array or a :class:`SymBanded`. Raises
    :class:`NotPositiveDefinite` when a pivot is not positive.
    """
    if isinstance(a, SymBanded):
        try:
            c = scipy.linalg.cholesky_banded(a.ab, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc
        return CholFactors(c, "banded")
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix must be symmetric")
    try:
        c = scipy.linalg.cholesky(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return CholFactors(c, "dense")


def chol_solve(f: CholFactors, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if f.kind == "banded":
        return scipy.linalg.cho_solve_banded((f.factor, True), b)
    return scipy.linalg.cho_solve((f.factor, True), b)

"""Smallest eigenvalues through an (accurate) inverse operator.

The drivers here never touch ``A`` itself. They only apply ``A^{-1}`` through
an :class:`InverseOperator`, so the accuracy of the computed eigenvalues is the
accuracy of that solve: backward stable solves (Cholesky) lose about
``u * kappa(A)`` relative accuracy in the smallest eigenvalue, solves through
accurate LDU factors do not.

The clamped-beam product discretization ``B = S_N T_N`` has a spurious simple
zero eigenvalue. :class:`DeflatedOperator` inverts ``B`` restricted to the
complement of its null vector ``v0 = T_N^{-1} e``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import blas, eigh_tridiagonal

from .aldu import LDLTFactors
from .exceptions import NoConvergenceWarning, ZeroVector
from .solve import (
    CholFactors,
    Factors,
    ProductOperator,
    chol_solve,
    solve_ldu,
    solve_product,
)

UNIT_ROUNDOFF = np.finfo(float).eps / 2


@dataclass(frozen=True, eq=False)
class InverseOperator:
    """``y -> A^{-1} y`` for some unscaled matrix ``A``.

    The represented matrix is ``scale * A``; eigenvalues reported by the
    drivers are ``scale / mu`` where ``mu`` is an eigenvalue of ``A^{-1}``.
    ``project`` (optional) maps iterates back into the subspace the operator
    acts on and is applied after every solve. ``gram`` (optional) applies the
    SPD matrix ``M`` of an inner product ``x^T M y`` in which the operator is
    self-adjoint; Lanczos uses it when the operator is not symmetric.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    dim: int
    accuracy: str = "accurate"
    scale: float = 1.0
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gram: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, y):
        x = self.apply(y)
        return self.project(x) if self.project is not None else x

    @classmethod
    def from_factors(cls, f: Factors, scale: float = 1.0) -> "InverseOperator":
        return cls(lambda y: solve_ldu(f, y), f.n, "accurate", scale)

    @classmethod
    def from_product(cls, p: ProductOperator) -> "InverseOperator":
        return cls(lambda y: solve_product(p, y, scaled=False), p.n, "accurate", p.scale)

    @classmethod
    def from_deflated(cls, d: "DeflatedOperator") -> "InverseOperator":
        # S_N T_N is self-adjoint in the T_N inner product, and P0 is T_N-orthogonal
        gram = d.tn.matvec if d.tn is not None else None
        return cls(lambda y: deflated_apply(d, y), d.n, "accurate", d.scale,
                   lambda x: project_p0(d, x), gram)

    @classmethod
    def from_cholesky(cls, f: CholFactors, scale: float = 1.0) -> "InverseOperator":
        return cls(lambda y: chol_solve(f, y), f.n, "baseline", scale)


@dataclass
class EigResult:
    """One approximate eigenpair of ``scale * A``.

    ``rho`` is the Rayleigh quotient (or Ritz value) of ``A^{-1}``,
    ``eigenvalue = scale / rho``, and ``residual`` is
    ``||A^{-1} x - rho x|| / ||x||`` for the unit vector ``vector``.
    """

    eigenvalue: float
    rho: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool
    accuracy: str = "accurate"
    driver: str = "invit"


def _start_vector(op: InverseOperator, x0):
    if x0 is None:
        x0 = np.ones(op.dim)
    x = np.array(x0, dtype=float)
    if x.shape != (op.dim,):
        raise ValueError(f"start vector must have shape ({op.dim},)")
    if op.project is not None:
        x = op.project(x)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ZeroVector("start vector is zero (after projection)")
    return x / nrm


def _threshold(op, tol_mult, mu):
    return tol_mult * op.dim * UNIT_ROUNDOFF * abs(mu)


def inverse_iteration(op: InverseOperator, x0=None, tol_mult: float = 1.0, maxit: int = 500) -> EigResult:
    """Power method on ``A^{-1}``; converges to the smallest-magnitude eigenvalue.

    Stops when ``||A^{-1} x_k - mu_k x_k|| / ||x_k|| <= tol_mult * n * u * |mu_k|``
    with ``mu_k`` the Rayleigh quotient of the unit iterate ``x_k``.
    ``iterations`` is the index ``k`` of the accepted iterate. At ``maxit``
    the last iterate is returned with ``converged=False`` and a
    :class:`~ddeig.exceptions.NoConvergenceWarning` is issued.
    """
    x = _start_vector(op, x0)
    best = None
    for k in range(maxit + 1):
        w = op(x)
        mu = float(x @ w)
        res = float(np.linalg.norm(w - mu * x))
        if mu == 0 or not np.isfinite(mu):
            raise ZeroVector(f"Rayleigh quotient {mu} at iteration {k}")
        result = EigResult(op.scale / mu, mu, x, res, k, False, op.accuracy, "invit")
        if best is None or res / abs(mu) < best.residual / abs(best.rho):
            best = result
        if res <= _threshold(op, tol_mult, mu):
            result.converged = True
            return result
        if k == maxit:
            break
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise ZeroVector(f"operator annihilated the iterate at step {k}")
        x = w / nrm
    warnings.warn(
        f"inverse iteration did not converge in {maxit} steps "
        f"(best relative residual {best.residual / abs(best.rho):.2e})",
        NoConvergenceWarning,
        stacklevel=2,
    )
    best.iterations = maxit
    return best


def lanczos_inverse(
    op: InverseOperator,
    x0=None,
    max_steps: Optional[int] = None,
    nev: int = 1,
    tol_mult: float = 1.0,
) -> List[EigResult]:
    """Symmetric Lanczos on ``A^{-1}`` with full reorthogonalization, no restarts.

    Returns the ``nev`` largest Ritz pairs of ``A^{-1}`` (smallest eigenvalues
    of ``A``) in increasing eigenvalue order. A pair is converged when the
    Lanczos residual estimate ``beta_m |s_mi|`` meets the same test as
    :func:`inverse_iteration`; the reported ``residual`` is recomputed
    explicitly. On breakdown (an invariant subspace) the pairs found so far
    are returned.

    With ``x0=None`` the start vector is all-ones for ``nev == 1``; for more
    pairs a fixed-seed random vector is used, since the constant vector is
    orthogonal to every antisymmetric mode of a symmetric grid operator.

    If ``op.gram`` is set the basis is orthonormal in that inner product, so
    operators like the deflated ``(S_N T_N)^{-1}`` are handled exactly.
    """
    n = op.dim
    if max_steps is None:
        max_steps = min(n, 100)
    if not (1 <= nev <= max_steps <= n):
        raise ValueError("need 1 <= nev <= max_steps <= dim")
    if x0 is None and nev > 1:
        x0 = np.random.default_rng(0).standard_normal(n)
    gram = op.gram if op.gram is not None else (lambda x: x)
    q = _start_vector(op, x0)
    q = q / np.sqrt(q @ gram(q))

    Q = np.empty((min(max_steps, 16), n))
    alphas, betas = [], []
    q_prev = np.zeros(n)
    beta_prev = 0.0
    converged = breakdown = False
    m = 0
    theta = S = None
    for j in range(max_steps):
        if j == Q.shape[0]:
            Q = np.concatenate([Q, np.empty((min(Q.shape[0], max_steps - j), n))])
        Q[j] = q
        m = j + 1
        w = op(q)
        alpha = float(q @ gram(w))
        w = w - alpha * q - beta_prev * q_prev
        for _ in range(2):  # reorthogonalize twice
            w -= Q[:m].T @ (Q[:m] @ gram(w))
        beta = math.sqrt(max(float(w @ gram(w)), 0.0))
        alphas.append(alpha)

        if m == 1:
            theta, S = np.array([alpha]), np.ones((1, 1))
        else:
            theta, S = eigh_tridiagonal(np.array(alphas), np.array(betas))
        order = np.argsort(-theta)
        theta, S = theta[order], S[:, order]
        top = min(nev, m)
        est = beta * np.abs(S[-1, :top])
        thr = tol_mult * n * UNIT_ROUNDOFF * np.abs(theta[:top])
        converged = m >= nev and bool(np.all(est <= thr))
        breakdown = beta <= UNIT_ROUNDOFF * np.max(np.abs(theta))
        if converged or breakdown:
            break
        betas.append(beta)
        q_prev, q, beta_prev = q, w / beta, beta

    top = min(nev, m)
    results = []
    for i in range(top):
        y = Q[:m].T @ S[:, i]
        y /= np.linalg.norm(y)
        th = float(theta[i])
        res = float(np.linalg.norm(op(y) - th * y))
        ok = breakdown or bool(beta * abs(S[-1, i]) <= tol_mult * n * UNIT_ROUNDOFF * abs(th))
        results.append(EigResult(op.scale / th, th, y, res, m, ok, op.accuracy, "lanczos"))
    if not all(r.converged for r in results):
        warnings.warn(f"Lanczos stopped after {m} steps with unconverged Ritz pairs", NoConvergenceWarning, stacklevel=2)
    return results


# --- deflation of the spurious zero eigenvalue ------------------------------


@dataclass(frozen=True, eq=False)
class DeflatedOperator:
    """``B = S_N T_N`` restricted to ``R(P0)``, ``P0 = I - v0 e^T / (e^T v0)``.

    ``0`` is a simple eigenvalue of ``B`` with left eigenvector ``e`` (all
    ones) and right eigenvector ``v0 = T_N^{-1} e``; the restriction is
    invertible and carries the remaining eigenvalues.
    """

    tn_factors: LDLTFactors
    sn_factors: LDLTFactors
    v0: np.ndarray
    e_dot_v0: float
    scale: float = 1.0
    tn: Optional[object] = None
    sn: Optional[object] = None

    @property
    def n(self) -> int:
        return self.v0.shape[0]

    @classmethod
    def build(cls, tn_factors, sn_factors, scale=1.0, tn=None, sn=None) -> "DeflatedOperator":
        v0 = solve_ldu(tn_factors, np.ones(tn_factors.n))
        v0.setflags(write=False)
        return cls(tn_factors, sn_factors, v0, float(np.sum(v0)), scale, tn, sn)

    def matvec(self, x) -> np.ndarray:
        """``B x = S_N (T_N x)`` (unscaled); needs the matrices."""
        if self.tn is None or self.sn is None:
            raise ValueError("operator was built without its matrices")
        return self.sn.matvec(self.tn.matvec(x))


def project_p0(d: DeflatedOperator, x) -> np.ndarray:
    """``x - v0 (e^T x) / (e^T v0)``: drop the null-space component."""
    x = np.asarray(x, dtype=float)
    return x - d.v0 * (np.sum(x) / d.e_dot_v0)


def deflated_apply(d: DeflatedOperator, y) -> np.ndarray:
    """Solve ``B x = y`` for ``x, y`` in ``R(P0)`` (``B`` unscaled).

    ``y`` must already satisfy ``e^T y = 0``. ``S_N = L_s D_s L_s^T`` with
    ``D_s = diag(1, ..., 1, 0)``; the last entry of ``L_s^{-1} y`` is zero in
    exact arithmetic and is set to zero explicitly.
    """
    y = np.array(y, dtype=float)
    n = d.n
    if n == 1:
        return np.zeros(1)
    ls = d.sn_factors
    ab = np.zeros((2, n))
    ab[0] = 1.0
    ab[1, :-1] = ls.sub
    x1 = blas.dtbsv(1, ab, y, lower=1, trans=0, diag=1)
    x2 = np.empty_like(x1)
    x2[:-1] = x1[:-1] / ls.d[:-1]
    x2[-1] = 0.0
    x3 = blas.dtbsv(1, ab, x2, lower=1, trans=1, diag=1)
    x = solve_ldu(d.tn_factors, x3)
    return project_p0(d, x)

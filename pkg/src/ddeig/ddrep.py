"""Diagonally dominant matrices stored by their off-diagonal part and dominance parts.

A matrix ``A`` with nonnegative diagonal is held as the pair ``(A_D, v)`` where
``A_D`` carries the off-diagonal entries and ``v[i] = a_ii - sum_{j != i} |a_ij|``.
Under small relative perturbations of ``(A_D, v)`` every entry of ``A`` (and its
LDU factors) moves by a small relative amount, which is what the accurate
factorization in :mod:`ddeig.aldu` relies on.

All row sums are accumulated left to right in ascending column order, with
``v[i]`` first when rebuilding a diagonal, so conversions are reproducible bit
for bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DDMParseError, NotDiagonallyDominant

STORAGE_KINDS = ("dense", "tridiag")


def _seq_rowsum(first, terms):
    """Row sums ``first[i] + terms[i, 0] + terms[i, 1] + ...`` evaluated left to right."""
    first = np.asarray(first, dtype=float)
    if terms.shape[1] == 0:
        return first.copy()
    # cumsum is a sequential accumulate; np.sum would reorder (pairwise)
    return np.cumsum(np.column_stack([first, terms]), axis=1)[:, -1]


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DDMatrix:
    """A diagonally dominant matrix ``D(A_D, v)`` with ``v >= 0``.

    Parameters
    ----------
    offdiag : ndarray
        ``dense`` storage: ``(n, n)`` array of off-diagonal entries, diagonal
        ignored and stored as zero. ``tridiag`` storage: ``(n - 1,)`` array of
        the (symmetric) sub/super-diagonal.
    v : ndarray
        Dominance parts, shape ``(n,)``, all ``>= 0``.
    storage : {"dense", "tridiag"}
    signs : ndarray, optional
        Row signs applied by :func:`from_entries` to turn negative diagonals
        positive. The represented matrix is ``diag(signs) @ original``.
    """

    offdiag: np.ndarray
    v: np.ndarray
    storage: str = "dense"
    signs: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.storage not in STORAGE_KINDS:
            raise ValueError(f"unknown storage {self.storage!r}")
        v = _frozen(np.atleast_1d(self.v))
        if v.ndim != 1:
            raise ValueError("v must be a vector")
        n = v.shape[0]
        off = np.array(self.offdiag, dtype=float, copy=True)
        if self.storage == "dense":
            if off.shape != (n, n):
                raise ValueError(f"dense offdiag must be {n}x{n}, got {off.shape}")
            np.fill_diagonal(off, 0.0)
        elif off.shape != (max(n - 1, 0),):
            raise ValueError(f"tridiag offdiag must have length {n - 1}, got {off.shape}")
        if not (np.all(np.isfinite(off)) and np.all(np.isfinite(v))):
            raise ValueError("entries must be finite")
        if np.any(v < 0):
            i = int(np.flatnonzero(v < 0)[0])
            raise NotDiagonallyDominant(f"dominance part v[{i}] = {float(v[i])!r} is negative")
        off.setflags(write=False)
        object.__setattr__(self, "offdiag", off)
        object.__setattr__(self, "v", v)
        if self.signs is not None:
            signs = _frozen(self.signs)
            if signs.shape != (n,) or not np.all(np.abs(signs) == 1):
                raise ValueError("signs must be a vector of +-1")
            object.__setattr__(self, "signs", signs)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        """Reconstructed diagonal ``v[i] + sum_{j != i} |a_ij|``."""
        if self.storage == "tridiag":
            a = np.abs(self.offdiag)
            left = np.concatenate([[0.0], a])
            right = np.concatenate([a, [0.0]])
            return (self.v + left) + right
        return _seq_rowsum(self.v, np.abs(self.offdiag))

    def dense_offdiag(self) -> np.ndarray:
        if self.storage == "dense":
            return np.array(self.offdiag)
        n = self.n
        out = np.zeros((n, n))
        idx = np.arange(n - 1)
        out[idx, idx + 1] = self.offdiag
        out[idx + 1, idx] = self.offdiag
        return out

    def to_dense(self) -> np.ndarray:
        return to_dense(self)

    def matvec(self, x) -> np.ndarray:
        """``A @ x`` in working precision without forming a dense matrix for tridiag storage."""
        x = np.asarray(x, dtype=float)
        d = self.diagonal()
        if self.storage == "dense":
            return self.to_dense() @ x
        y = d * x
        y[:-1] += self.offdiag * x[1:]
        y[1:] += self.offdiag * x[:-1]
        return y

    def as_dense_storage(self) -> "DDMatrix":
        if self.storage == "dense":
            return self
        return DDMatrix(self.dense_offdiag(), self.v, "dense", self.signs)

    def __eq__(self, other):
        if not isinstance(other, DDMatrix):
            return NotImplemented
        if self.storage != other.storage or self.n != other.n:
            return False
        same_signs = (self.signs is None and other.signs is None) or (
            self.signs is not None
            and other.signs is not None
            and np.array_equal(self.signs, other.signs)
        )
        return (
            same_signs
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.offdiag, other.offdiag)
        )

    def __repr__(self):
        return f"DDMatrix(n={self.n}, storage={self.storage!r})"


def from_entries(entries, storage: str = "dense") -> DDMatrix:
    """Build the dominance-parts representation of a square matrix.

    Rows with a negative diagonal are multiplied by -1 first and the sign
    vector is kept on the result. Raises :class:`NotDiagonallyDominant` if any
    ``v[i] < 0`` afterwards; there is no tolerance.

    >>> from_entries([[2.0, -1.0], [-1.0, 2.0]]).v
    array([1., 1.])
    """
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("entries must be finite")
    n = a.shape[0]
    diag = np.diag(a).copy()
    signs = np.where(diag < 0, -1.0, 1.0)
    a = signs[:, None] * a
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    if n > 1:
        s = np.cumsum(np.abs(off), axis=1)[:, -1]
    else:
        s = np.zeros(n)
    v = np.diag(a) - s
    bad = np.flatnonzero(v < 0)
    if bad.size:
        i = int(bad[0])
        raise NotDiagonallyDominant(
            f"row {i} is not diagonally dominant: v[{i}] = {float(v[i])!r}"
        )
    signs_out = signs if np.any(signs < 0) else None
    if storage == "tridiag":
        if signs_out is not None:
            raise ValueError("tridiag storage needs nonnegative diagonals")
        if np.any(np.triu(off, 2)) or np.any(np.tril(off, -2)):
            raise ValueError("matrix is not tridiagonal")
        sup, sub = np.diag(off, 1), np.diag(off, -1)
        if not np.array_equal(sup, sub):
            raise ValueError("tridiag storage requires a symmetric matrix")
        return DDMatrix(sup, v, "tridiag")
    return DDMatrix(off, v, "dense", signs_out)


def to_dense(m: DDMatrix) -> np.ndarray:
    """Assemble the full matrix of ``m`` (without undoing any row sign scaling)."""
    out = m.dense_offdiag()
    out[np.diag_indices(m.n)] = m.diagonal()
    return out


def tridiag_from_parts(off, v) -> DDMatrix:
    return DDMatrix(np.asarray(off, dtype=float), np.asarray(v, dtype=float), "tridiag")


# --- .ddm text format -------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_ddm(m: DDMatrix, path) -> None:
    """Write ``m`` as a ``.ddm`` text file (1-based off-diagonal triplets)."""
    lines = [f"DDM {m.n} {m.storage}", "v: " + " ".join(_fmt(x) for x in m.v)]
    if m.storage == "tridiag":
        for i, x in enumerate(m.offdiag):
            if x != 0:
                lines.append(f"{i + 1} {i + 2} {_fmt(x)}")
                lines.append(f"{i + 2} {i + 1} {_fmt(x)}")
    else:
        rows, cols = np.nonzero(m.offdiag)
        for i, j in zip(rows, cols):
            lines.append(f"{i + 1} {j + 1} {_fmt(m.offdiag[i, j])}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_float(tok, lineno, path):
    try:
        x = float(tok)
    except ValueError:
        raise DDMParseError(f"bad number {tok!r}", lineno, path) from None
    if not np.isfinite(x):
        raise DDMParseError(f"non-finite value {tok!r}", lineno, path)
    return x


def read_ddm(path) -> DDMatrix:
    """Parse a ``.ddm`` file written by :func:`write_ddm` (or by hand)."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        raw = fh.readlines()

    n = storage = v = None
    entries = {}
    for lineno, line in enumerate(raw, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "DDM":
                raise DDMParseError("expected header 'DDM <n> <dense|tridiag>'", lineno, path)
            try:
                n = int(parts[1])
            except ValueError:
                raise DDMParseError(f"bad dimension {parts[1]!r}", lineno, path) from None
            if n < 1:
                raise DDMParseError("dimension must be positive", lineno, path)
            storage = parts[2]
            if storage not in STORAGE_KINDS:
                raise DDMParseError(f"unknown storage {storage!r}", lineno, path)
            continue
        if line.startswith("v:"):
            if v is not None:
                raise DDMParseError("duplicate 'v:' line", lineno, path)
            toks = line[2:].split()
            if len(toks) != n:
                raise DDMParseError(f"expected {n} dominance parts, got {len(toks)}", lineno, path)
            v = np.array([_parse_float(t, lineno, path) for t in toks])
            if np.any(v < 0):
                raise DDMParseError("dominance parts must be nonnegative", lineno, path)
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DDMParseError("expected 'i j value'", lineno, path)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise DDMParseError("indices must be integers", lineno, path) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise DDMParseError(f"index ({i}, {j}) out of range for n={n}", lineno, path)
        if i == j:
            raise DDMParseError("diagonal entries are implied by v; only off-diagonals allowed", lineno, path)
        if (i, j) in entries:
            raise DDMParseError(f"duplicate entry ({i}, {j})", lineno, path)
        entries[(i, j)] = (_parse_float(parts[2], lineno, path), lineno)

    if n is None:
        raise DDMParseError("missing header", None, path)
    if v is None:
        raise DDMParseError("missing 'v:' line", None, path)

    if storage == "dense":
        off = np.zeros((n, n))
        for (i, j), (x, _) in entries.items():
            off[i - 1, j - 1] = x
        return DDMatrix(off, v, "dense")

    off = np.zeros(max(n - 1, 0))
    seen = np.zeros(max(n - 1, 0), dtype=bool)
    for (i, j), (x, lineno) in entries.items():
        if abs(i - j) != 1:
            raise DDMParseError(f"entry ({i}, {j}) outside the tridiagonal band", lineno, path)
        k = min(i, j) - 1
        if seen[k] and off[k] != x:
            raise DDMParseError(f"entry ({i}, {j}) breaks symmetry", lineno, path)
        off[k] = x
        seen[k] = True
    return DDMatrix(off, v, "tridiag")

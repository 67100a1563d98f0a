"""Exception and warning types raised across the package."""


class DDEigError(Exception):
    """Base class for all errors raised by ddeig."""


class NotDiagonallyDominant(DDEigError, ValueError):
    """A row has a negative dominance part after sign scaling."""


class DDMParseError(DDEigError, ValueError):
    """Malformed ``.ddm`` file."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ColumnDominancePivotUnavailable(DDEigError):
    """No nonzero column diagonally dominant pivot exists at some step."""


class ZeroPivot(DDEigError):
    """Unpivoted elimination met a zero pivot above a nonzero column."""


class SingularFactor(DDEigError, ZeroDivisionError):
    """A factorization has a zero diagonal entry, so it cannot be solved with.

    ``factor_index`` identifies the offending factor of a product, if any.
    """

    def __init__(self, message, factor_index=None):
        self.factor_index = factor_index
        super().__init__(message)


class NotPositiveDefinite(DDEigError, ValueError):
    """Cholesky met a nonpositive pivot."""


class SingularOperator(DDEigError, ValueError):
    """The requested operator is singular (e.g. zero shift on a periodic grid)."""


class NegativeCoefficient(DDEigError, ValueError):
    """A sampled coefficient is negative and would break diagonal dominance."""


class UnsupportedKind(DDEigError, ValueError):
    """Unknown problem kind."""


class ZeroVector(DDEigError, ArithmeticError):
    """An eigensolver iterate collapsed to the zero vector."""


class NoConvergenceWarning(UserWarning):
    """An eigensolver stopped at its iteration cap without meeting the tolerance."""

"""Exception types raised by the solver library."""


class CnlsError(Exception):
    """Base class for all library-specific errors."""


class InvalidCoefficient(CnlsError):
    """A coefficient field violates a structural requirement (sign, support)."""


class InvalidGrid(CnlsError):
    """Grid is incompatible with the problem (size, parity, decay margin)."""


class EmptySupport(CnlsError):
    """All coupling coefficients vanish identically; the coupling set is empty."""


class NonPositivePotential(CnlsError):
    """A linear potential has non-positive essential infimum."""


class IntegrationOverflow(CnlsError):
    """Exponential growth of a basis solution exceeds double precision range."""


class DivisionDomain(CnlsError):
    """A denominator field vanishes where a ratio is required."""


class UnsupportedNonlinearity(CnlsError):
    """Growth constants are not available for this nonlinearity."""


class HypothesisFailure(CnlsError):
    """A required existence hypothesis fails for the given problem."""


class ParameterOutOfRange(CnlsError):
    """A branch parameter lies outside its admissible interval."""


class NoNontrivialSolution(CnlsError):
    """Every seed collapsed to zero or iteration budgets were exhausted."""


class SymmetryViolation(CnlsError):
    """Coefficients are not even, which the odd solver requires."""


class SupportContainsOrigin(CnlsError):
    """The coupling support contains 0, so the odd construction degenerates."""


class NewtonDivergence(CnlsError):
    """Damped Newton failed to converge within its iteration budget."""


class SingularJacobian(CnlsError):
    """The Newton Jacobian is numerically singular."""


class ParseError(CnlsError):
    """A configuration document is malformed."""

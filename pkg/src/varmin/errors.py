"""Exception types shared across the toolkit."""


class VarminError(Exception):
    """Base class for all toolkit errors."""


class InvalidDomainError(VarminError):
    pass


class InvalidOrderError(VarminError):
    pass


class InvalidResolutionError(VarminError):
    pass


class OutOfDomainError(VarminError):
    pass


class UnknownIntegrandError(VarminError):
    pass


class CertificateUnavailableError(VarminError):
    """No coercivity radius exists for the given inputs (vacuous or unbounded)."""


class EvaluationError(VarminError):
    """An integrand produced a non-finite value.

    Attributes carry the offending probe point and, during assembly, the cell
    index where it happened.
    """

    def __init__(self, message, point=None, cell=None):
        super().__init__(message)
        self.point = point
        self.cell = cell

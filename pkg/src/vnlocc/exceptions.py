"""Exception hierarchy shared by every module."""


class VNLoccError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VNLoccError, ValueError):
    """Malformed input: bad shapes, non-positive weights, non-unit states."""


class SideError(ValidationError):
    """A map was used on the wrong side of the bipartition."""


class UnsupportedError(VNLoccError):
    """The requested operation is not defined for this kind of algebra."""


class NotConvertibleError(VNLoccError):
    """The source state does not majorise-convert to the target."""


class ContractViolation(VNLoccError):
    """A numerical post-condition failed; indicates degenerate input or a bug."""


class MatchingError(ContractViolation):
    """No perfect matching on the support of a doubly stochastic matrix."""

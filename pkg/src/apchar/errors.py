"""Exception types shared across the package."""


class ApCharError(Exception):
    """Base class for all errors raised by this package."""


class InvalidWeight(ApCharError, ValueError):
    """A weight's samples or dimensions violate the domain contract."""


class InvalidExponent(ApCharError, ValueError):
    """An exponent token or exponent pair is malformed (e.g. p1 <= p2)."""


class InvalidParameter(ApCharError, ValueError):
    """A scalar parameter is out of domain (nonpositive cut level, n < 1, ...)."""


class CubeOutOfRange(ApCharError, ValueError):
    """A grid cube does not fit inside the weight's grid."""


class PolicyError(ApCharError, ValueError):
    """An enumeration policy is invalid for the given grid dimensions."""

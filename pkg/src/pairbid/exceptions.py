"""Exception types raised across the package."""


class PairBidError(Exception):
    """Base class for package errors."""


class ConfigError(PairBidError, ValueError):
    """Malformed scenario or graph configuration."""


class PreconditionError(PairBidError, ValueError):
    """An operation was called outside its documented precondition."""


class OracleLimitError(PairBidError):
    """Instance too large (or too slow) for the exhaustive solvers."""

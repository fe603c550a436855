"""Exception types shared across the package."""


class BuybackEpsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BuybackEpsError, ValueError):
    """An input violates a documented precondition or invariant."""


class RegimeError(DomainError):
    """A formula was evaluated outside its validity regime.

    Raised when a compounding factor of the buyback-program series turns
    non-positive, i.e. the enhancement model no longer describes the input.
    """


class DataError(BuybackEpsError, ValueError):
    """A data file or record set cannot be ingested as requested."""

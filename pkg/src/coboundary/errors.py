"""Exception hierarchy shared by every solver and the CLI."""


class CoboundaryError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(CoboundaryError, ValueError):
    """An input violates an operation's stated precondition."""


class DomainMismatchError(PreconditionError):
    """A set or function is not contained in the domain it is used on."""


class UndefinedPointError(CoboundaryError):
    """A transformation was evaluated outside every source piece."""


class SearchExhaustedError(CoboundaryError):
    """The rearrangement search failed to meet its guaranteed bound."""


class ResourceLimitError(CoboundaryError):
    """A configured resource guard (denominator size, cell count) tripped."""


class MalformedCertificateError(CoboundaryError, ValueError):
    """A certificate or problem document is structurally invalid."""

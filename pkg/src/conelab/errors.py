"""Exception types shared across the package.

Two failure families matter to callers: bad inputs (scenario files,
out-of-domain parameters) and numerical-contract breaches (a computation
that cannot certify its own accuracy guarantees).  The CLI maps them to
exit codes 1 and 2 respectively.
"""


class ConelabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ConelabError):
    """Invalid input: parameters, preconditions, or scenario content."""


class ContractError(ConelabError):
    """A numerical guarantee could not be met (non-Hermitian input,
    failed convergence, non-integer winding, ...)."""

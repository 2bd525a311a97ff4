"""Error taxonomy shared across the package.

The CLI maps these onto process exit codes, so the distinctions matter:
contract violations (bad arguments, broken preconditions) are the caller's
fault, capacity errors mean the requested problem size is outside the
supported envelope, and unsupported operations name a missing smoothness
hypothesis (typically ReLU in a second-order context).
"""


class ContractError(ValueError):
    """An argument or configuration violates a documented contract."""


class PreconditionError(ContractError):
    """A mathematical hypothesis of the requested operation is violated."""


class CapacityError(ContractError):
    """The problem size exceeds a documented capacity guard."""


class UnsupportedOperationError(ContractError):
    """The operation is undefined for this system (e.g. second derivatives
    of a ReLU network)."""

"""Exception hierarchy shared by all modules."""


class QubitLossError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QubitLossError, ValueError):
    """An object failed its numerical invariants (normalization, unitarity, ...)."""


class CapacityError(QubitLossError):
    """A register would exceed the configured maximum number of qubits."""


class DomainError(QubitLossError, ValueError):
    """An argument lies outside the domain of the operation."""


class ImpossibleOutcomeError(QubitLossError):
    """A forced measurement outcome has (numerically) zero probability."""


class ProtocolOrderError(QubitLossError):
    """Protocol steps were applied out of order, e.g. inserting into an occupied site."""


class SingularityError(DomainError):
    """A formula was evaluated at a singular point (e.g. zero detuning)."""

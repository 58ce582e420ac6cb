"""Exception hierarchy shared by the library and the CLI."""


class FlatCouplingError(Exception):
    """Base class for all errors raised by this package."""


class SingularJetError(FlatCouplingError, ValueError):
    """A jet operation left the domain of the underlying function."""

    def __init__(self, function, message=""):
        self.function = function
        super().__init__(f"{function}: {message}" if message else function)


class DomainError(FlatCouplingError, ValueError):
    """A physical quantity left the region where the model is valid."""


class OrderingError(FlatCouplingError):
    """The fixed acyclic ordering between subsystems is violated."""


class SingularInverseError(FlatCouplingError):
    """An inverse level map was evaluated at a singular point."""

    def __init__(self, message, subsystem=None, level=None):
        self.subsystem = subsystem
        self.level = level
        where = ""
        if subsystem is not None:
            where = f" (subsystem {subsystem}, level {level})"
        super().__init__(message + where)


class InformationContractError(FlatCouplingError):
    """A controller was handed less neighbour data than its information set needs."""


class SynthesisError(FlatCouplingError):
    """Gain synthesis failed (non-stabilizable pair or no convergence)."""


class ConfigError(FlatCouplingError, ValueError):
    """Invalid scenario configuration."""

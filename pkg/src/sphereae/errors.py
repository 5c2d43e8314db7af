"""Exception hierarchy shared by every module.

The CLI maps each family to an exit code: ``ConfigError``/``DomainError`` to 2,
``DataError`` to 3 and ``NumericalError`` to 4.
"""


class SphereAEError(Exception):
    """Base class for all library errors."""


class DomainError(SphereAEError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(SphereAEError, ValueError):
    """Invalid run configuration (bad flag combination, empty list, ...)."""


class UnsupportedParameterError(DomainError):
    """A distribution parameter is outside the range the sampler is accurate for."""


class DataError(SphereAEError):
    """Malformed or unreadable input data."""


class IdxParseError(DataError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CheckpointFormatError(DataError):
    pass


class NumericalError(SphereAEError, ArithmeticError):
    """A computation produced a degenerate or non-finite state."""


class DegenerateInputError(NumericalError):
    def __init__(self, message, row):
        super().__init__(f"{message} (row {row})")
        self.row = row


class DegenerateLatentError(DegenerateInputError):
    """An SAE latent row has (numerically) zero centered norm."""


class TrainingDivergenceError(NumericalError):
    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step

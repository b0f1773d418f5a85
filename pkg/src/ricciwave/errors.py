"""Exception types shared across the package."""


class RicciWaveError(Exception):
    """Base class for all package errors."""


class DomainError(RicciWaveError, ValueError):
    """A coordinate lies outside the domain where a metric family is defined."""

    def __init__(self, coordinate, value, domain):
        self.coordinate = coordinate
        self.value = value
        self.domain = domain
        super().__init__(f"{coordinate}={value!r} outside domain {domain}")


class DivergenceError(RicciWaveError, ArithmeticError):
    """A time march produced non-finite values."""

    def __init__(self, t, detail=""):
        self.t = t
        msg = f"non-finite values at t={t:.17g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConfigError(RicciWaveError, ValueError):
    """Invalid experiment configuration or usage."""


class UnsupportedProfileError(RicciWaveError, ValueError):
    """Terminal-data profile has no closed-form solution for the requested operation."""


class ExperimentError(RicciWaveError):
    """A module error raised inside an experiment; ``__cause__`` holds the original."""

    def __init__(self, experiment, cause):
        self.experiment = experiment
        super().__init__(f"experiment {experiment!r}: {type(cause).__name__}: {cause}")

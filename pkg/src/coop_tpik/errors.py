"""Exception types raised across the package."""


class ContractViolation(ValueError):
    """Inputs with inconsistent shapes or violated preconditions."""


class InputError(ValueError):
    """Inputs that are well shaped but unusable (NaN, inf, ...)."""


class NumericalError(ArithmeticError):
    """A solver intermediate became non-finite."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class SingularityError(RuntimeError):
    """The vehicle attitude came too close to the roll-pitch-yaw singularity."""


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path

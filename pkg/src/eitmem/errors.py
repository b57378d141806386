class EitmemError(Exception):
    """Base class for library errors."""


class ConfigError(EitmemError, ValueError):
    """Invalid physical or numerical configuration.

    ``problems`` lists every violated constraint, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericalError(EitmemError, RuntimeError):
    """A numerical procedure failed to converge or hit a degenerate case."""


class GridError(NumericalError):
    """Time/frequency grid too small for the propagated pulse."""


class BracketError(NumericalError):
    """Root bracket does not contain the target value."""

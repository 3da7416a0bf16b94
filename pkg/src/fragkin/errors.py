"""Exception hierarchy shared by all fragkin modules."""


class FragkinError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FragkinError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(FragkinError, ValueError):
    """Inputs are individually valid but mutually inconsistent (shape, grid)."""


class ModelError(FragkinError):
    """A kernel does not define a usable model (e.g. divergent fragment count)."""


class UnsupportedOperationError(FragkinError):
    """The operation is not defined for this kernel family."""


class ParameterError(FragkinError, ValueError):
    """A parameter violates an admissibility condition."""


class ContractionError(FragkinError):
    """The contraction constants are internally inconsistent (k >= 1 at t0)."""


class ConvergenceError(FragkinError):
    """Picard iteration did not reach tolerance.

    Attributes
    ----------
    last_difference : float
        Weighted-norm distance between the last two iterates.
    predicted_bound : float
        Geometric bound ``k**iterations * first_difference`` the iteration
        should have met if the contraction factor ``k`` were honoured.
    """

    def __init__(self, message, last_difference=float("nan"), predicted_bound=float("nan")):
        super().__init__(message)
        self.last_difference = last_difference
        self.predicted_bound = predicted_bound


class ConfigError(FragkinError):
    """Scenario configuration could not be parsed or validated."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))

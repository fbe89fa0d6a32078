"""Exception types raised by kdiffract."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class SingularPointError(DomainError):
    """Evaluation requested exactly at an integrable singularity."""


class ConvergenceDomainError(DomainError):
    """Series evaluation requested outside its radius of convergence."""


class NonConvergenceError(ArithmeticError):
    """A series hit its term cap before meeting the tolerance."""


class IntegrationAccuracyError(ArithmeticError):
    """Requested tolerance not met within the work budget.

    ``achieved`` holds the error estimate that was reached.
    """

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved

"""Exception hierarchy shared by the solver and audit modules."""


class FracStefanError(Exception):
    """Base class for all package errors."""


class ValidationError(FracStefanError, ValueError):
    """Bad parameters or data.

    ``problems`` lists every violation found, not only the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class AdmissibilityError(ValidationError):
    """Initial data or a front path outside the admissible class."""


class SolverError(FracStefanError, RuntimeError):
    """A time step or linear solve failed."""

    def __init__(self, message, *, step=None, condition=None):
        self.step = step
        self.condition = condition
        extra = []
        if step is not None:
            extra.append(f"step={step}")
        if condition is not None:
            extra.append(f"cond~{condition:.3e}")
        if extra:
            message = f"{message} ({', '.join(extra)})"
        super().__init__(message)


class ConvergenceError(SolverError):
    """Fixed-point iteration did not reach its tolerance."""

    def __init__(self, message, residuals):
        self.residuals = list(residuals)
        super().__init__(f"{message}; residual history: {self.residuals}")

class TsbvpError(Exception):
    """Base class for package errors."""


class DomainError(TsbvpError, ValueError):
    """An argument lies outside an operation's domain (off-grid point, short grid, bad order)."""


class ConfigError(TsbvpError, ValueError):
    """A problem file or parameter block is missing data or inconsistent."""


class ExprSyntaxError(TsbvpError, ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprEvalError(TsbvpError, ArithmeticError):
    """Evaluation produced a non-finite value or hit a domain fault."""


class NewtonFailure(TsbvpError, RuntimeError):
    """Damped Newton did not reach the residual tolerance."""

    def __init__(self, message: str, iterations: int, residual_inf: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual_inf = residual_inf

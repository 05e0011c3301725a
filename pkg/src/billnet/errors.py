"""Exception types shared across the package."""


class BillnetError(Exception):
    """Base class for all package-specific errors."""


class ParseError(BillnetError):
    """Malformed or inconsistent input file.

    ``line`` is the 1-based line number in the offending file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleConfigError(BillnetError):
    """Synthesis configuration that cannot be realised."""


class ConvergenceError(BillnetError):
    """Iterative computation failed to converge within its iteration cap."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")

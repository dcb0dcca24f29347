"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid experiment configuration file.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrationError(RuntimeError):
    """Time integration produced non-finite values or a hard undershoot."""

    def __init__(self, message: str, time: float, max_abs_u: float, max_abs_v: float):
        super().__init__(
            f"{message} (t={time:.6g}, max|u|={max_abs_u:.6g}, max|v|={max_abs_v:.6g})"
        )
        self.time = time
        self.max_abs_u = max_abs_u
        self.max_abs_v = max_abs_v


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance within budget."""

    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v:.6g}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)

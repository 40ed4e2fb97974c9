"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ResourceError(RuntimeError):
    """A configurable size/budget cap was exceeded."""


class ConstructionError(RuntimeError):
    """A built object violates a structural requirement (e.g. connectivity)."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual

"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Problem data with inconsistent shapes (A vs b, G vs h, or vs n)."""


class ConvergenceError(RuntimeError):
    """An iterative solve hit its iteration cap before reaching tolerance.

    The best iterate found so far is attached as ``best``.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class DivergenceError(RuntimeError):
    """Iterates blew past the divergence guard (norm > 1e12)."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class InfeasibleError(ValueError):
    """A constraint system required to be nonempty has no feasible point."""


class DegenerateActiveSetError(RuntimeError):
    """No active set yields valid multipliers at a requested point."""

    def __init__(self, message, grid_point=None):
        super().__init__(message)
        self.grid_point = grid_point


class StepMismatchError(ValueError):
    """A state pair fails the one-step precondition of a certificate."""

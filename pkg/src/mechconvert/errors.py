class ParameterError(ValueError):
    """A model input is outside its physical domain."""

    def __init__(self, field: str, msg: str):
        self.field = field
        super().__init__(f"{field}: {msg}")


class InfeasibleError(ValueError):
    """A requested drive or design target cannot be realized.

    ``max_achievable`` carries the best attainable value when one is known.
    """

    def __init__(self, msg: str, max_achievable: float | None = None):
        self.max_achievable = max_achievable
        super().__init__(msg)


class FitError(RuntimeError):
    """Least-squares fit failed to converge."""

    def __init__(self, msg: str, best=None, history=None):
        self.best = best
        self.history = list(history or [])
        super().__init__(msg)

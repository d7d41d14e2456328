"""Exception types shared across the iterative engines and the time loop."""


class NonConvergence(RuntimeError):
    """An iterative phi-function evaluation failed to reach its tolerance.

    Carries the number of iterations performed and an optional detail
    describing which part of the computation stalled.
    """

    def __init__(self, message, iters=0, detail=None):
        super().__init__(message)
        self.iters = iters
        self.detail = detail


class StepFailure(RuntimeError):
    """A time step could not be completed; the caller should shrink dt."""

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause

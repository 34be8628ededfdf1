class IntegrationError(RuntimeError):
    """A simulated state became non-finite."""


class SingularMatrixError(RuntimeError):
    """A regularized Gram matrix (or the mode system) could not be solved reliably."""


class DivergenceWarning(RuntimeWarning):
    """A rollout exceeded its magnitude bound and was truncated."""

class DegenerateMetricError(ArithmeticError):
    """The curvature density of a fiber metric is not positive at some node."""


class IndefiniteFormError(ArithmeticError):
    """A Hermitian form failed the positive-definiteness (Cholesky) test."""

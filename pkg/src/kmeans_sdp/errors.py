"""Exception types shared across the package."""


class Error(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(Error):
    """Label vector or matrix shape is inconsistent with the dataset."""


class EmptyCluster(Error):
    """A partition assigns no points to some cluster."""


class CoincidentCenters(Error):
    """Two cluster centers coincide, so the center-line direction is undefined."""

    def __init__(self, a, b):
        self.pair = (a, b)
        super().__init__(f"clusters {a} and {b} have coincident centers")


class NotBalanced(Error):
    """An operation requiring equal cluster sizes got divergent sizes."""

    def __init__(self, sizes):
        self.sizes = list(sizes)
        super().__init__(f"cluster sizes are not all equal: {self.sizes}")


class InvalidProblem(Error):
    """The cost matrix fails the symmetry/nonnegativity/zero-diagonal contract."""


class NotConverged(Error):
    """Solver hit the iteration cap; carries the best iterate found."""

    def __init__(self, solution):
        self.solution = solution
        super().__init__(
            f"solver did not converge within {solution.iterations} iterations "
            f"(residuals: {solution.residuals})"
        )


class RoundingAmbiguous(Error):
    """Neither thresholding nor the Lloyd fallback produced a stable k-partition."""


class TooLarge(Error):
    """Exhaustive enumeration would exceed the configured partition budget."""

    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} partitions exceeds enumeration limit {limit}")


class MismatchedInputs(Error):
    """Certificate and kernels were built from different inputs."""


class NonPsdCovariance(Error):
    """A covariance matrix has a meaningfully negative eigenvalue."""


class UnsupportedShape(Error):
    """Requested center geometry is not defined for the given k or dimension."""

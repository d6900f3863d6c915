"""Exception types shared across the package."""


class ZerolabError(Exception):
    pass


class DomainError(ZerolabError):
    """Input point lies outside the chart of the model."""


class ModelConstructionError(ZerolabError):
    """A model invariant failed at construction time."""


class QuadratureError(ZerolabError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class NonConvergenceError(ZerolabError):
    """Iterative solver failed to converge."""

    def __init__(self, msg, indices=None):
        super().__init__(msg)
        self.indices = indices


class BoundaryZeroError(ZerolabError):
    """A zero is numerically indistinguishable from a contour segment."""


class TruncationError(ZerolabError):
    """q-expansion tail bound exceeds the requested tolerance."""


class ConfigError(ZerolabError):
    """Invalid experiment configuration."""

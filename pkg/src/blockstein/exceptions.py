"""Exception types shared across the package."""


class BlocksteinError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(BlocksteinError, ValueError):
    """An argument violates a documented precondition."""


class NotSpdError(InvalidArgumentError):
    """A matrix that must be symmetric positive definite is not."""


class InvalidModelError(InvalidArgumentError):
    """A candidate model violates the block-size or sample-size constraints."""


class DegenerateVarianceError(InvalidArgumentError):
    """A variance estimate is zero where a positive value is required."""

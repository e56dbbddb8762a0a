"""Exception hierarchy shared by all modules."""


class SquareTwistError(Exception):
    """Base class for every error raised by the package."""


class ParseError(SquareTwistError, ValueError):
    def __init__(self, message, text=None, position=None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class AxisUndefined(SquareTwistError):
    """The quaternion is +-1, so it has no rotation axis."""


class TraceMismatch(SquareTwistError):
    pass


class DegenerateCenter(SquareTwistError):
    pass


class NotSpecialOrthogonal(SquareTwistError):
    pass


class NotTransitive(SquareTwistError):
    def __init__(self, orbits):
        self.orbits = orbits
        super().__init__(f"permutations are not transitive; orbits: {orbits}")


class BasepointOutsideCylinder(SquareTwistError):
    pass


class UnknownName(SquareTwistError, KeyError):
    pass


class UnassignedGenerator(SquareTwistError, KeyError):
    pass


class NoConvergence(SquareTwistError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class DegenerateCycle(SquareTwistError):
    pass


class DegenerateSphere(SquareTwistError):
    pass


class CentralHolonomy(SquareTwistError):
    """Core holonomy is +-1; the circle flow is undefined there."""


class HypothesisViolation(SquareTwistError):
    def __init__(self, guard, message=None):
        self.guard = guard
        super().__init__(message or f"hypothesis violated: {guard}")


class Degenerate(SquareTwistError):
    pass


class UndefinedRatio(SquareTwistError):
    def __init__(self, message, product_residual=None):
        self.product_residual = product_residual
        super().__init__(message)


class StepFailure(SquareTwistError):
    pass

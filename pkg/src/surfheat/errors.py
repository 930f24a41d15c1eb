"""Exception types shared across the package."""


class SurfheatError(Exception):
    """Base class; ``module`` tags the subsystem that raised."""

    module = "surfheat"

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class NotInTube(SurfheatError):
    module = "geometry"


class DegenerateGradient(SurfheatError):
    module = "geometry"


class DegenerateTriangle(SurfheatError):
    module = "mesh"


class QualityViolation(SurfheatError):
    module = "mesh"


class DimensionMismatch(SurfheatError):
    module = "linalg"


class NoConvergence(SurfheatError):
    module = "linalg"

    def __init__(self, msg, x=None, residual=None, iterations=None, history=None):
        super().__init__(msg)
        self.x = x
        self.residual = residual
        self.iterations = iterations
        self.history = history or []


class Breakdown(NoConvergence):
    pass


class EllipticityViolation(SurfheatError):
    module = "fem"


class SlabSolveError(SurfheatError):
    module = "timestepping"

    def __init__(self, msg, slab, residual=None, history=None):
        super().__init__(msg)
        self.slab = slab
        self.residual = residual
        self.history = history or []


class NonPositiveError(SurfheatError):
    module = "verification"


class ParseError(SurfheatError):
    module = "cli"

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class ValidationError(SurfheatError):
    module = "cli"

    def __init__(self, msg, field=None):
        super().__init__(msg)
        self.field = field

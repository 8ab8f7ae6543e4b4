"""Exception hierarchy.

Every expected failure derives from :class:`BoustroError`, which is a
``ValueError`` so callers that only care about bad input can catch that.
"""


class BoustroError(ValueError):
    pass


class NotEnoughVertices(BoustroError):
    pass


class NonConvex(BoustroError):
    pass


class DegenerateVertex(BoustroError):
    pass


class EmptyInput(BoustroError):
    pass


class NonPositiveTemperature(BoustroError):
    pass


class BadPPT(BoustroError):
    pass


class InvalidParameter(BoustroError):
    pass


class EmptyPlan(BoustroError):
    pass


class DivergenceDetected(BoustroError):
    pass


class BadSideCount(BoustroError):
    pass

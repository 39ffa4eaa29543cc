"""Exception hierarchy. Every error raised by the package derives from RefPriorError."""


class RefPriorError(Exception):
    pass


class DomainError(RefPriorError, ValueError):
    """An argument lies outside the domain of the operation."""


class EmptySample(RefPriorError, ValueError):
    pass


class DegenerateSample(RefPriorError, ValueError):
    """The sample-induced parameter interval is empty."""


class ShapeMismatch(RefPriorError, ValueError):
    pass


class QuadratureError(RefPriorError, ArithmeticError):
    """Adaptive integration did not reach tolerance within the subdivision budget."""


class NaNError(QuadratureError):
    pass


class InternalError(RefPriorError, RuntimeError):
    pass


class MissingReference(RefPriorError, LookupError):
    pass


class ConfigError(RefPriorError, ValueError):
    pass

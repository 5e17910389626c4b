"""Exception hierarchy.

Every error carries a ``category`` (the class name) so the CLI can print a
single machine-parsable line on failure.
"""


class ShapePriorError(Exception):
    @property
    def category(self) -> str:
        return type(self).__name__


class EmptyShape(ShapePriorError, ValueError):
    pass


class LengthMismatch(ShapePriorError, ValueError):
    pass


class MalformedStructure(ShapePriorError, ValueError):
    pass


class IngestInconsistent(ShapePriorError, ValueError):
    pass


class NotPositiveDefinite(ShapePriorError, ArithmeticError):
    pass


class NoClasses(ShapePriorError, ValueError):
    pass


class CorrelationUndefined(ShapePriorError, ValueError):
    pass


class ConfigError(ShapePriorError, ValueError):
    pass

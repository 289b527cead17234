"""Exception hierarchy shared by the computational modules and the CLI."""


class AmenlabError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 3

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class DomainError(AmenlabError, ValueError):
    """Argument outside the documented domain."""

    exit_code = 2


class PreconditionError(AmenlabError, ValueError):
    exit_code = 2


class UnsupportedSpecError(AmenlabError, ValueError):
    exit_code = 2


class NumericError(AmenlabError, ArithmeticError):
    """Iteration failed to converge; ``partial`` holds the last iterate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

    def to_dict(self):
        out = super().to_dict()
        out["partial"] = self.partial
        return out


class CapExceededError(NumericError):
    """Group closure grew past the element cap (possibly infinite or too large)."""

    def __init__(self, message, count):
        super().__init__(message, partial=count)
        self.count = count


class PrecisionError(NumericError):
    """Two elements sit at an ambiguous distance relative to the tolerance."""

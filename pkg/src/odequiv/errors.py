"""Exception hierarchy shared by all modules.

Two families matter to the command line: :class:`UsageError` (bad input text,
exit code 2) and :class:`DomainError` (singularities, empty brackets, exit
code 1).
"""


class OdequivError(Exception):
    """Base class for every error raised by this package."""


class UsageError(OdequivError):
    pass


class ParseError(UsageError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class DomainError(OdequivError):
    """A computation left its domain of definition."""

    def __init__(self, message: str, subexpr=None):
        self.subexpr = subexpr
        if subexpr is not None:
            message = f"{message} in '{subexpr}'"
        super().__init__(message)


class UnboundVariableError(DomainError):
    def __init__(self, name: str):
        self.name = name
        OdequivError.__init__(self, f"unbound variable '{name}'")


class SingularityError(DomainError):
    """A coefficient or invariant is singular (or vanishes) inside the interval."""

    def __init__(self, message: str, location: float | None = None):
        self.location = location
        if location is not None:
            message = f"{message} near {location:.6g}"
        OdequivError.__init__(self, message)


class JetOrderError(DomainError):
    pass


class DegenerateChainError(DomainError):
    """An invariant chain member vanishes identically, so no monomial H exists."""


class AmbiguousMapError(DomainError):
    pass


class PartialOverlapError(DomainError):
    def __init__(self, message: str, valid: tuple[float, float] | None = None):
        self.valid = valid
        if valid is not None:
            message = f"{message}; valid sub-interval [{valid[0]:.6g}, {valid[1]:.6g}]"
        OdequivError.__init__(self, message)


class NonMonotoneError(DomainError):
    pass

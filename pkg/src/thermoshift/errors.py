"""Exception types shared across the package."""


class ThermoshiftError(Exception):
    """Base class for all package-specific errors."""


class SpecFileError(ThermoshiftError):
    """An input spec file is malformed or inconsistent."""


class CapExceededError(ThermoshiftError):
    """An enumeration would exceed the configured item cap.

    Caps are hard errors by design: results are never silently truncated.
    """


class EmptyBranchSetError(ThermoshiftError):
    """A horseshoe construction produced no branches in the requested window."""


class SingularMatrixError(ThermoshiftError):
    """A matrix family contains a singular matrix where invertibility is required."""


class ReducibleSystemError(ThermoshiftError):
    """An operation requiring recurrent structure met a system with no cycles."""


class RootBracketError(ThermoshiftError):
    """A root solve could not establish its sign or monotonicity conditions."""

"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so batch drivers can
classify failures without parsing messages.
"""


class PagkitError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message="", **context):
        super().__init__(message or self.code)
        self.context = context


class NotHurwitzError(PagkitError):
    """State matrix has an eigenvalue with nonnegative real part."""

    code = "not-hurwitz"


class EigenSolverError(PagkitError):
    code = "eig-fail"


class ExpOverflowError(PagkitError):
    code = "exp-overflow"


class PeriodSingularError(PagkitError):
    """I - e^{AT} is numerically singular (non-Hurwitz leak)."""

    code = "period-singular"


class EmptyInputError(PagkitError):
    code = "empty"


class NoConvergeError(PagkitError):
    """Iteration budget exhausted; ``best`` holds the last iterate."""

    code = "no-converge"

    def __init__(self, message="", best=None, **context):
        super().__init__(message, **context)
        self.best = best


class SupSearchError(PagkitError):
    """Direction-sphere search failed; ``best`` is a valid lower estimate."""

    code = "sup-fail"

    def __init__(self, message="", best=None, **context):
        super().__init__(message, **context)
        self.best = best


class InvalidBoundError(PagkitError):
    code = "invalid-bound"


class StructureMismatchError(PagkitError):
    code = "structure-mismatch"


class DivergedError(PagkitError):
    """Trajectory left the finite range; ``last_index`` is the last finite step."""

    code = "diverged"

    def __init__(self, message="", last_index=None, **context):
        super().__init__(message, **context)
        self.last_index = last_index


class NoSteadyStateError(PagkitError):
    code = "no-pss"


class UnboundedSuspectError(PagkitError):
    code = "unbounded-suspect"

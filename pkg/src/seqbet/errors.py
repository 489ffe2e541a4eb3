"""Exception hierarchy shared by the whole package."""


class SeqBetError(Exception):
    """Base class for every error raised by seqbet."""


class InputError(SeqBetError, ValueError):
    """Malformed or out-of-range user input."""


class RefinementError(SeqBetError, ValueError):
    """A clopen set cannot be refined to the requested granularity."""


class OracleError(SeqBetError):
    """A sequence oracle could not produce a requested bit."""


class BudgetError(SeqBetError):
    """An explicit step budget was exhausted."""


class InternalError(SeqBetError):
    """A construction invariant could not be established."""


class InsufficiencyError(InternalError):
    """A betting node ran out of mass while covering an enumerated cylinder.

    ``accounting`` holds the state needed to diagnose the failure.
    """

    def __init__(self, message, accounting=None):
        super().__init__(message)
        self.accounting = accounting or {}


class LimitError(SeqBetError):
    """A configured run limit was hit; ``trace`` holds the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace

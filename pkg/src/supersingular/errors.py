"""Exception hierarchy shared by every module.

The CLI maps :class:`PreconditionError` to exit code 2 and
:class:`InvariantError` to exit code 3.
"""


class SupersingularError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(SupersingularError, ValueError):
    """Caller supplied data outside an operation's domain."""


class InvariantError(SupersingularError, RuntimeError):
    """A guaranteed property failed to hold (search cap hit, bad witness, ...)."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}

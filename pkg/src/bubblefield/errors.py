"""Shared exception bases.

Every module defines its own concrete exceptions; they all derive from one
of the two bases below so the CLI can map failures to exit codes
(InvalidInput -> 1, NumericalFailure -> 2).
"""


class BubblefieldError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(BubblefieldError):
    """Rejected user-supplied data or parameters."""


class NumericalFailure(BubblefieldError):
    """A numerical procedure could not complete."""

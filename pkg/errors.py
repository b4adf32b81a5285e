"""
Exception hierarchy for bellcheck.

Every library error derives from BellCheckError so the command line front end
can map failures onto its exit codes in one place.
"""


class BellCheckError(Exception):
    """Base class for all bellcheck errors."""


class DomainError(BellCheckError, ValueError):
    """An operation is undefined for the given inputs."""


class ResourceError(BellCheckError):
    """A computation exceeds the desk-scale limits (e.g. too many strategies)."""


class FormatError(BellCheckError):
    """A document on disk is malformed or carries an unsupported format_version."""


class NoViolationError(DomainError):
    """The quantum value lies inside the local prediction, so there is nothing to measure."""

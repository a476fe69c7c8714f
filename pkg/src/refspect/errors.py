"""Exception hierarchy shared across the package.

Everything raised on bad input data derives from :class:`RefspectError` so the
command line layer can map data problems to one exit code without enumerating
modules.  Usage errors (bad flags, unknown subcommands) are argparse's problem
and never reach these classes.
"""

from __future__ import annotations


class RefspectError(Exception):
    """Base class for all data and state errors raised by this package."""


class IngestError(RefspectError):
    """A bibliographic export could not be ingested."""


class StructuralError(IngestError):
    """The file itself is malformed (not just one record).

    Carries the 1-based line number where parsing became impossible.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyReferenceError(IngestError):
    """A cited-reference string was empty or whitespace."""


class ClusterError(RefspectError):
    """An invalid clustering operation (bad merge/split targets, bad replay)."""


class JournalReplayError(ClusterError):
    """A merge-journal line could not be replayed.

    Carries the 1-based journal line number.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"journal line {line}: {message}")
        self.line = line


class DiversityError(RefspectError):
    """Diversity computation failed (bad map, degenerate distances)."""


class DegenerateMapError(DiversityError):
    """All pairwise distances over the normalization domain are zero."""


class DatasetError(RefspectError):
    """A stored dataset could not be read or written."""


class DatasetCorruptError(DatasetError):
    """Stored dataset fails checksum, count, or cross-file validation."""


class UnsupportedVersionError(DatasetError):
    """Stored dataset has a format version this code does not understand."""

    def __init__(self, found: str, expected: str):
        super().__init__(
            f"dataset format version {found!r} not supported (expected major "
            f"version of {expected!r})"
        )
        self.found = found
        self.expected = expected


class ServiceError(RefspectError):
    """HTTP layer error with a status code attached."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class StaleRevisionError(ServiceError):
    """Mutation carried an expected_revision that no longer matches."""

    def __init__(self, expected: int, actual: int):
        super().__init__(
            409, f"expected revision {expected} but dataset is at {actual}"
        )
        self.expected = expected
        self.actual = actual

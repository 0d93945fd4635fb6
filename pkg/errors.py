"""Exception hierarchy shared by every valkit module.

Library code raises these; `main.execute_command` and the Flask routes turn
them into ``{"success": False, "error": ...}`` results.
"""


class ValkitError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""


class GroupError(ValkitError):
    pass


class FormulaError(ValkitError):
    pass


class UnsupportedError(ValkitError):
    """Input is well formed but outside the decidable class."""


class ResourceLimitError(ValkitError):
    """A configured cap (DNF cells, enumeration budget) was exceeded."""


class SeriesError(ValkitError):
    pass


class HenselError(ValkitError):
    pass


class ValuationError(ValkitError):
    pass


class CutError(ValkitError):
    pass


class PerfectnessError(ValkitError):
    pass


class UsageError(ValkitError):
    """Missing or malformed command arguments (CLI exit code 2)."""

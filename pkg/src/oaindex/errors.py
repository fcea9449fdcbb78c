"""Exception hierarchy. The CLI maps each family onto an exit code."""

from __future__ import annotations


class OaiError(Exception):
    """Base class for every error raised by this package."""


class InputValidationError(OaiError):
    """Input files or values violate their documented format (exit code 2)."""


class PreconditionError(OaiError):
    """Inputs are individually valid but cannot be combined (exit code 3)."""


class TaxonomyError(InputValidationError):
    def __init__(self, issues, report=None):
        self.issues = list(issues)
        self.report = report
        head = "; ".join(str(i) for i in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(f"{len(self.issues)} taxonomy issue(s): {head}{more}")


class ScoreError(InputValidationError):
    pass


class MatrixError(InputValidationError):
    pass


class ProtocolError(InputValidationError):
    """A model response does not satisfy the scoring protocol."""


class UnscoredDwaError(PreconditionError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"{len(self.missing)} DWA(s) have no score: {', '.join(self.missing)}")


class StatsError(PreconditionError):
    pass

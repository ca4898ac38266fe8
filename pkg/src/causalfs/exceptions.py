"""Exception hierarchy.

Errors derived from :class:`InputError` describe bad configuration or bad
input data; the CLI maps them to exit code 2. Everything else that derives
from :class:`CausalFSError` is a runtime failure (exit code 1).
"""


class CausalFSError(Exception):
    """Base class for all package errors."""

    module = "causalfs"
    hint = ""

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "module": self.module,
            "message": str(self),
            "hint": self.hint,
        }


class InputError(CausalFSError):
    """Bad configuration or input data."""


class SchemaError(InputError):
    module = "series"
    hint = "check the ingestion schema against the file header"


class IngestionError(InputError):
    module = "series"
    hint = "missing data is not supported; clean or impute the file first"

    def __init__(self, message, file=None, member=None, row=None, column=None):
        super().__init__(message)
        self.file = file
        self.member = member
        self.row = row
        self.column = column

    def to_dict(self):
        out = super().to_dict()
        out.update(file=self.file, member=self.member, row=self.row, column=self.column)
        return out


class ShapeError(InputError):
    module = "series"
    hint = "all members must share the same variables in the same order"


class ConfigError(InputError):
    module = "config"
    hint = "fix the offending configuration value"


class AlignmentError(CausalFSError):
    module = "series"
    hint = "reduce tau_max or drop the limiting member"


class SplitError(InputError):
    module = "series"
    hint = "use more members or different split fractions"


class DegeneracyError(CausalFSError):
    module = "citest"
    hint = "remove collinear conditioning columns"

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InsufficientSamplesError(CausalFSError):
    module = "citest"
    hint = "pool more members or cap the conditioning dimension"


class DiscoveryError(CausalFSError):
    module = "discovery"
    hint = "pool more members or set max_cond_dim"


class UnderdeterminedError(InputError):
    module = "regress"
    hint = "select fewer features than training samples"


class ContractError(InputError):
    module = "regress"
    hint = "evaluate on samples built with the model's features"


class GenerationError(InputError):
    module = "synth"
    hint = "lower the edge or autocorrelation coefficients"

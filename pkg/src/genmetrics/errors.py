"""Exception types shared by all genmetrics modules.

The CLI maps these onto exit codes: input-contract violations
(FormatError, DataError, UsageError) exit with 2, computation
failures (DegenerateError, NumericalError) with 1.
"""


class MetricsError(Exception):
    """Base class for all genmetrics errors."""


class FormatError(MetricsError):
    """Malformed GMF1 payload or sidecar (bad magic, version, truncation)."""


class DataError(MetricsError):
    """Data violates a container invariant (NaN, row sums, dimension pairing)."""


class UsageError(MetricsError):
    """An operation was called outside its contract (bad argument, wrong source tag)."""


class DegenerateError(MetricsError):
    """The requested statistic is undefined on this input (constant column, zero variance)."""


class NumericalError(MetricsError):
    """A computation failed its numerical health check."""

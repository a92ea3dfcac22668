"""Exception taxonomy shared across the toolkit.

The classes map one-to-one onto the CLI exit codes: construction and
capability problems are usage errors (exit 1), ingestion and shape
problems are data errors (exit 2), and anything raised while learning
is a fit error (exit 3).
"""


class EstkitError(Exception):
    """Base class for all toolkit errors."""


class ConstructionError(EstkitError):
    """Unknown estimator kind, unknown parameter, or a value that fails its check."""


class CapabilityError(EstkitError):
    """A method was called on an estimator whose kind does not expose it."""


class NotFittedError(EstkitError):
    """A fitted-only operation was called before fit succeeded."""


class DataError(EstkitError):
    """Malformed input data: ingestion failures, shape and width mismatches."""


class FitError(EstkitError):
    """Learning failed: degenerate data, contract violations at fit time."""


class PersistenceError(EstkitError):
    """A model archive could not be written or safely reconstructed."""

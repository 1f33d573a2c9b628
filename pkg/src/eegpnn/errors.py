"""Exception hierarchy shared by every stage of the pipeline."""


class EegPnnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EegPnnError, ValueError):
    """A parameter set violates its own constraints (e.g. cutoff above Nyquist)."""


class InputError(EegPnnError, ValueError):
    """Data handed to an operation does not satisfy its preconditions."""


class EvaluationError(EegPnnError):
    """An evaluation cannot produce a meaningful result (e.g. a single class)."""

"""Exception types shared across the package."""


class SpecAbcError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionError(SpecAbcError):
    """Matrix or vector arguments with incompatible shapes."""


class DomainError(SpecAbcError):
    """Numeric arguments outside the valid domain (non-finite, wrong sign)."""


class NumericError(SpecAbcError):
    """A numeric routine could not produce a trustworthy result."""


class ModelConstructionError(SpecAbcError):
    """Model parameters are missing, unknown, or out of range."""


class UnsupportedSchemeError(SpecAbcError):
    """The requested integrator does not apply to the given model."""


class SummaryError(SpecAbcError):
    """A trajectory cannot be summarized (overflowed, degenerate, too short)."""


class RunError(SpecAbcError):
    """An inference run could not produce a usable result."""


class StatsError(SpecAbcError):
    """Posterior statistics requested from insufficient draws."""


class ConfigError(SpecAbcError):
    """A run configuration file, key, or value is invalid."""


class IngestionError(SpecAbcError):
    """An external data file could not be parsed."""

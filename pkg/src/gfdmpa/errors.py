class ConfigError(ValueError):
    """Invalid modulation, PA, estimator or run configuration."""


class NumericalGuardError(ArithmeticError):
    """A numerical consistency check failed (overflow, imaginary residue, ...)."""


class NoSaturationPoint(ValueError):
    """The output-power curve has no stationary point on the search interval."""


class NoCompressionPoint(ValueError):
    """The output-power curve never falls 1 dB below its linear asymptote."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class UnsupportedCombination(DomainError):
    """No closed form exists for the requested scheme/distribution/delay."""


class ConfigError(ValueError):
    """A configuration file or flag set could not be turned into a model."""

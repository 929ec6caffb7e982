"""Exceptions shared across the package."""


class BudgetError(RuntimeError):
    """An enumeration would exceed the configured size budget."""


class PrecisionError(RuntimeError):
    """The p-adic precision ceiling was reached before a valuation could be certified."""


class PoleError(ArithmeticError):
    """An L-factor or Euler-factor expression was evaluated at a pole."""


class WitnessNotFoundError(RuntimeError):
    """No attaining coefficient was found inside the prescribed search window."""


class ConfigError(ValueError):
    """A run configuration failed schema validation."""


class IncompatiblePrimeChoiceError(RuntimeError):
    """No factor choice is compatible with the primes already fixed above p."""

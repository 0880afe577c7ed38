"""Error types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid identifier, config file, or hyperparameter value."""


class ContractViolationError(ValueError):
    """Caller broke an API precondition (bad shapes, out-of-range action, ...)."""


class NumericsError(RuntimeError):
    """Non-finite values showed up where finite numbers are required."""

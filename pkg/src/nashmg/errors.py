"""Exception types shared across the package."""


class NonFinite(ValueError):
    """Input array contains NaN or infinite entries."""


class DimensionMismatch(ValueError):
    pass


class InfeasibleLP(RuntimeError):
    """The matrix-game LP failed; zero-sum games always have a value, so this is a bug."""


class MalformedInput(ValueError):
    pass


class InvariantViolation(ValueError):
    pass


class HistoryBudgetExceeded(RuntimeError):
    """Exact mixture best response would expand more history nodes than allowed."""


class ConfigError(ValueError):
    pass

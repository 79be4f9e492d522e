"""
Exception types shared across the simulation engine
"""


class ConfigurationError(ValueError):
    """Invalid configuration, schedule or experiment definition."""


class NumericError(ArithmeticError):
    """Non-finite integrand or state, or an integration that cannot proceed."""


class NotYetObservable(LookupError):
    """Social information at t - tau is not available yet."""

    def __init__(self, t: int, tau: int):
        super().__init__(f"social information at t={t}, tau={tau} is not observable")
        self.t = t
        self.tau = tau


# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2
EXIT_NUMERIC = 3

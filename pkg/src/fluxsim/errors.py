"""Exception types shared across the package.

The command-line interface maps these onto process exit codes:
configuration problems exit with 2, numerical failures with 3 and
fit failures (no convergence, or the model does not describe the
data) with 4.
"""


class FluxsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(FluxsimError):
    """Invalid or inconsistent input parameters / configuration files."""


class NumericError(FluxsimError):
    """A numerical routine failed (no convergence, lost invariants, ...)."""


class FitError(FluxsimError):
    """A least-squares fit could not produce a usable result."""

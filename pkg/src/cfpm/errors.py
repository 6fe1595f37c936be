"""Error types mapped to CLI exit codes."""


class CfpmError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CfpmError):
    """Invalid or inconsistent run configuration (CLI exit 2)."""


class NumericalError(CfpmError):
    """Numerical failure during a pipeline stage (CLI exit 4)."""

"""Shared exception types.

The CLI maps these onto process exit codes: ConfigError -> 2,
CapExceededError -> 3, NumericalHealthError -> 4.
"""


class DimensionError(ValueError):
    """Operands have incompatible qubit counts or vector lengths."""


class CapExceededError(RuntimeError):
    """A requested computation exceeds a documented size cap."""


class NumericalHealthError(RuntimeError):
    """A numerical invariant (normalization, realness, drift) was violated."""


class ConfigError(ValueError):
    """Invalid or incoherent experiment configuration."""

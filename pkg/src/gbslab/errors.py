"""Exception types shared across the package."""


class GbsLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GbsLabError):
    """Invalid experiment configuration; message lists every violation found."""


class GuardError(GbsLabError):
    """A size or enumeration guard was exceeded."""


class UnphysicalStateError(GbsLabError):
    """Input matrix does not describe a valid quantum state."""


class DecompositionError(GbsLabError):
    """A matrix factorization failed or did not reproduce its input."""


class KernelConsistencyError(GbsLabError):
    """Numerical kernels produced mutually inconsistent results (likely a bug)."""

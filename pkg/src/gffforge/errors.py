"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain a routine is defined on."""


class SingularityError(ValueError):
    """Evaluation requested exactly on a kernel singularity."""


class ResolutionError(RuntimeError):
    """A lattice is too coarse to resolve the requested geometry."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""


class ConfigError(ValueError):
    """An experiment configuration file is malformed or inconsistent."""

"""Exception types shared across the package."""


class GeometryError(ValueError):
    """A domain fails a geometric precondition (positivity, disjointness,
    star-shapedness margin, slicing)."""


class SolverError(RuntimeError):
    """A capacity solver could not produce a trustworthy value
    (ill-conditioning beyond regularisation, zero Monte Carlo hits)."""


class ConfigError(ValueError):
    """Bad command-line or config-file input."""

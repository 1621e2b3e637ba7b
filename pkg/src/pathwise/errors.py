"""Exception hierarchy shared by the whole package."""


class PathwiseError(Exception):
    """Base class for user-facing failures (mapped to exit code 2 by the CLI)."""


class DomainError(PathwiseError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(PathwiseError, ValueError):
    """Invalid generator, experiment or strategy configuration."""


class ContractError(PathwiseError):
    """A stated precondition of the operation (admissibility, regularity) fails."""


class ResolutionExceeded(PathwiseError):
    """Exact computation requested on more grid points than the hard cap allows."""

    def __init__(self, n_points: int, cap: int):
        self.n_points = n_points
        self.cap = cap
        super().__init__(
            f"exact mode limited to {cap} points, got {n_points}; coarsen the grid "
            f"or use the dyadic upper bound"
        )

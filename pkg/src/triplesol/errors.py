"""Exception types shared across the package."""


class TriplesolError(Exception):
    pass


class DomainError(TriplesolError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedError(TriplesolError):
    """No explicit constant is available for the requested parameters (p = N)."""


class ConvergenceError(TriplesolError):
    """An iterative routine exhausted its budget without meeting tolerance."""


class CollapseError(TriplesolError):
    """The mountain-pass path maximum fell into one of the endpoint basins."""


class ConfigError(TriplesolError, ValueError):
    """Invalid run configuration. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path

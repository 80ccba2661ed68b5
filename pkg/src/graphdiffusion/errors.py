"""Exception types shared across the package."""


class InputError(ValueError):
    """Rejected input: bad graph data, invalid parameters, unusable files."""


class ComputeError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""

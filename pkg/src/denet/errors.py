"""Exception types shared across the package."""


class DenetError(Exception):
    """Base class for package-specific failures."""


class ValidationError(DenetError):
    """Invalid configuration, manifest, or argument values."""


class DataError(DenetError):
    """Malformed or corrupt data files."""


class TrainingError(DenetError):
    """Unrecoverable failure inside the training loop."""

"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems (missing/corrupt files, incompatible datasets) with 3, and
numerical failures with 4.
"""


class GoldmineError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GoldmineError):
    """Invalid configuration, CLI arguments, or unsupported request."""


class DataError(GoldmineError):
    """Problems with datasets or checkpoints on disk."""


class DigestMismatch(DataError):
    """Stored digest does not match the file content (truncation/corruption)."""


class MissingAugmentation(DataError):
    """A training method requires augmented fields the dataset lacks."""


class NumericError(GoldmineError):
    """A numerical invariant was violated during computation."""


class DegenerateStep(NumericError):
    """A per-step transition probability hit the clamping guard."""


class NonpositiveDensity(NumericError):
    """An exact density underflowed to zero on an evaluated point."""


class NonFiniteLoss(NumericError):
    """A training loss or gradient became non-finite."""


class ReferenceMismatch(GoldmineError):
    """Ratio evaluation requested at a denominator the model was not trained for."""

"""Exception types shared across the toolkit.

Everything raised here means the caller handed us something unusable
(bad configuration, malformed data, not enough of it).  The CLI maps
these to exit code 2; anything else that escapes is an internal error.
"""


class AdssmError(Exception):
    """Base class for all toolkit errors caused by user input."""


class ConfigurationError(AdssmError):
    """Sweep or estimator configuration is internally inconsistent."""


class BandRangeError(AdssmError):
    """A band does not overlap the frequency grid."""


class GridMismatchError(AdssmError):
    """Band and record were resolved against different grids."""


class PlacementError(AdssmError):
    """Capture center frequency is not on the sweep schedule."""


class InputError(AdssmError):
    """Malformed numeric input: wrong shape, non-finite, out of range."""


class InsufficientDataError(AdssmError):
    """Too few samples or bins for the requested operation."""


class ScenarioError(AdssmError):
    """Synthetic scenario description is invalid."""

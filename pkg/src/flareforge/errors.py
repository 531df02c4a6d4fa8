"""Exception types shared across the toolkit.

Every error raised by the public API is either a builtin (IOError,
ValueError) or a subclass of FlareforgeError, so CLI code can map
exceptions to machine-readable error kinds.
"""


class FlareforgeError(Exception):
    """Base class for toolkit-specific errors."""


class FormatError(FlareforgeError):
    """Unsupported or malformed file format (PNG colortype, PFM header, ...)."""


class DimensionError(FlareforgeError):
    """Operands have incompatible spatial dimensions."""


class ConfigError(FlareforgeError):
    """Invalid configuration value or combination."""


class EmptyFlareError(FlareforgeError):
    """A flare image is entirely black, so no light source can be located."""


class EmptyRegionError(FlareforgeError):
    """A region mask selects no pixels where at least one is required."""


class BoundsError(FlareforgeError):
    """Region coordinates fall outside the associated image."""


class MissingDepthError(FlareforgeError):
    """No depth map was found for a background image."""


class PairingError(FlareforgeError):
    """Directory contents cannot be matched one-to-one by filename."""

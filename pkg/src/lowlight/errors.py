"""Exception types raised across the package."""


class LowlightError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedImageError(LowlightError):
    """The file decoded, but is not an 8-bit RGB image."""


class EmptyDatasetError(LowlightError):
    """A dataset directory contains no usable images."""


class DegenerateInputError(LowlightError, ValueError):
    """An image is too small for the requested pooled operation."""


class CheckpointError(LowlightError):
    """A weight container is missing, truncated, or structurally wrong."""


class TrainingAbortError(LowlightError):
    """Training hit a non-finite loss or gradient and cannot continue."""

"""Exception types raised by the fitting and benchmark code."""


class KpfitError(Exception):
    """Base class for all library-specific errors."""


class InvalidRotationError(KpfitError):
    """A matrix claimed to be a rotation fails the orthonormality or determinant check."""


class DegenerateGeometryError(KpfitError):
    """Input geometry is degenerate (collinear, coplanar, or rank-deficient)."""


class InsufficientConstraintsError(KpfitError):
    """Too few usable keypoints to constrain the pose."""


class BehindCameraError(KpfitError):
    """Estimated depths violate cheirality (points behind the camera)."""


class FormatError(KpfitError):
    """A file does not conform to its documented format."""

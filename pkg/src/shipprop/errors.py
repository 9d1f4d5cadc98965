"""Exception hierarchy shared across the pipeline.

Two top-level families map onto the CLI exit codes: bad or inconsistent
inputs (exit 2) and data that is structurally valid but degenerate for the
requested computation (exit 3).
"""


class ShipPropError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ShipPropError):
    """Invalid arguments, malformed files, or inconsistent inputs."""


class PgmError(InputError):
    """Malformed PGM file (bad magic, truncated payload, maxval out of range)."""


class ManifestError(InputError):
    """Invalid multiband manifest (missing file, size mismatch, duplicate role)."""


class DegenerateDataError(ShipPropError):
    """Structurally valid input on which the requested computation collapses."""


class DegenerateHistogramError(DegenerateDataError):
    """Histogram with fewer than two occupied levels; no threshold exists."""


class FusionDegenerateError(DegenerateDataError):
    """Pan-sharpening fit is underdetermined (constant MS bands, varying pan)."""

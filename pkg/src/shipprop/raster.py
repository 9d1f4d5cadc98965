"""Pixel-grid types, quantization, normalization, and PGM/manifest I/O.

Conventions used throughout the package: grids are row-major float64 arrays
indexed ``values[row, col]`` with ``(x, y) = (col, row)`` and the origin at
the top-left. Values are immutable after construction; all operations return
new objects.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from shipprop.errors import InputError, ManifestError, PgmError

PGM_MAXVAL_LIMIT = 65535


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(eq=False)
class Band:
    """Single real-valued pixel grid.

    Attributes:
        values: (height, width) float64 array, finite everywhere.
        levels_hint: number of quantization levels when the band is known to
            be integer-quantized, else None.
    """

    values: np.ndarray
    levels_hint: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError(f"band must be a 2-D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("band contains non-finite values")
        self.values = _freeze(v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(eq=False)
class MultibandImage:
    """Ordered stack of co-registered bands with unique role labels."""

    bands: list[Band]
    band_roles: list[str]

    def __post_init__(self):
        if len(self.bands) < 1:
            raise InputError("multiband image needs at least one band")
        if len(self.band_roles) != len(self.bands):
            raise InputError("band_roles length must match band count")
        if len(set(self.band_roles)) != len(self.band_roles):
            raise InputError(f"duplicate band roles in {self.band_roles}")
        w, h = self.bands[0].width, self.bands[0].height
        for role, band in zip(self.band_roles, self.bands):
            if band.width != w or band.height != h:
                raise InputError(
                    f"band {role!r} is {band.width}x{band.height}, expected {w}x{h}"
                )

    @property
    def width(self) -> int:
        return self.bands[0].width

    @property
    def height(self) -> int:
        return self.bands[0].height

    def band(self, role: str) -> Band:
        try:
            return self.bands[self.band_roles.index(role)]
        except ValueError:
            raise InputError(f"no band with role {role!r}") from None


@dataclass(eq=False)
class BinaryMask:
    """Row-major boolean grid."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2:
            raise InputError(f"mask must be 2-D, got shape {b.shape}")
        self.bits = _freeze(b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def minmax_scale(values: np.ndarray) -> np.ndarray:
    """Linear min-max rescale of an array into [0, 1]; constant input -> zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def quantize_levels(band: Band, levels: int) -> Band:
    """Quantize a band to integer levels 0..levels-1.

    Min-max rescale followed by half-up rounding; a constant band maps to all
    zeros. The result carries levels_hint = levels.
    """
    if levels < 2:
        raise InputError(f"levels must be >= 2, got {levels}")
    scaled = minmax_scale(band.values) * (levels - 1)
    out = np.clip(np.floor(scaled + 0.5), 0, levels - 1)
    return Band(out, levels_hint=levels)


def normalize_unit(band: Band) -> Band:
    """Min-max rescale into [0, 1]; a constant band maps to all zeros."""
    return Band(minmax_scale(band.values))


_PGM_TOKEN = re.compile(rb"^(?:\s|#[^\n]*\n)*(\S+)")


def _read_header_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    m = _PGM_TOKEN.match(buf[pos:])
    if m is None:
        raise PgmError("truncated PGM header")
    return m.group(1), pos + m.end()


def read_pgm(path) -> Band:
    """Read a binary PGM ("P5") file.

    Samples are big-endian 16-bit when maxval > 255. The returned band has
    levels_hint = maxval + 1.
    """
    buf = Path(path).read_bytes()
    magic, pos = _read_header_token(buf, 0)
    if magic != b"P5":
        raise PgmError(f"wrong magic {magic!r}, expected b'P5'")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_header_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PgmError(f"non-numeric {name} field {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmError(f"invalid dimensions {width}x{height}")
    if not 1 <= maxval <= PGM_MAXVAL_LIMIT:
        raise PgmError(f"maxval {maxval} out of range [1, {PGM_MAXVAL_LIMIT}]")
    pos += 1  # single whitespace byte separates header from raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    payload = buf[pos : pos + expected]
    if len(payload) < expected:
        raise PgmError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return Band(values.astype(np.float64), levels_hint=maxval + 1)


def write_pgm(band: Band, path, maxval: int | None = None) -> None:
    """Write a band as binary PGM ("P5").

    The band must hold integers in [0, maxval]. maxval defaults to
    levels_hint - 1 when set, else to the band maximum.
    """
    v = band.values
    if maxval is None:
        maxval = band.levels_hint - 1 if band.levels_hint else max(int(v.max()), 1)
    if not 1 <= maxval <= PGM_MAXVAL_LIMIT:
        raise PgmError(f"maxval {maxval} out of range [1, {PGM_MAXVAL_LIMIT}]")
    if np.any(v != np.floor(v)) or v.min() < 0 or v.max() > maxval:
        raise InputError("band values must be integers in [0, maxval]")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{band.width} {band.height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + v.astype(dtype).tobytes())


def read_manifest(path) -> MultibandImage:
    """Load a multiband image from a JSON manifest.

    Schema: {"bands": [{"role": "pan", "path": "pan.pgm"}, ...]} with paths
    resolved relative to the manifest's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    entries = doc.get("bands")
    if not isinstance(entries, list) or not entries:
        raise ManifestError("manifest must list at least one band")
    bands, roles = [], []
    for entry in entries:
        try:
            role, rel = entry["role"], entry["path"]
        except (TypeError, KeyError):
            raise ManifestError(f"band entry needs 'role' and 'path': {entry!r}") from None
        pgm_path = path.parent / rel
        if not pgm_path.is_file():
            raise ManifestError(f"band file not found: {pgm_path}")
        bands.append(read_pgm(pgm_path))
        roles.append(role)
    try:
        return MultibandImage(bands, roles)
    except InputError as exc:
        raise ManifestError(str(exc)) from exc

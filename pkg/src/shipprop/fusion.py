"""Spectral stage: simplified pan-sharpening, reflectance contrast, and PCA.

Pan-sharpening follows the least-squares synthetic-pan recipe: fit the
downsampled pan image against the MS bands, then inject pan detail through
the ratio pan / synthetic-pan. PCA reduces the selected bands to the single
component fed to the anomaly detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shipprop.errors import FusionDegenerateError, InputError
from shipprop.raster import Band, BinaryMask, MultibandImage

SP_FLOOR_FACTOR = 1e-6
JACOBI_SWEEP_LIMIT = 100
EIGENVALUE_CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class ContrastReport:
    """Ship-versus-background reflectance contrast for one band.

    c_m is the ratio of mean ship reflectance to mean background reflectance;
    c_q1 uses the first quartile of the ship pixels instead of their mean.
    """

    band_role: str
    m_t: float
    q1_t: float
    m_b: float
    c_m: float
    c_q1: float

    def to_dict(self) -> dict:
        return {
            "band_role": self.band_role,
            "m_t": self.m_t,
            "q1_t": self.q1_t,
            "m_b": self.m_b,
            "c_m": self.c_m,
            "c_q1": self.c_q1,
        }


@dataclass(eq=False)
class PcaModel:
    """Eigen-decomposition of the per-pixel band covariance.

    eigenvectors holds one orthonormal K-vector per row, matching the
    descending eigenvalues; each row's sign is fixed so its largest-magnitude
    component is positive.
    """

    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.mean.shape[0]


def _box_downsample(values: np.ndarray, scale: int) -> np.ndarray:
    h, w = values.shape
    return values.reshape(h // scale, scale, w // scale, scale).mean(axis=(1, 3))


def _bilinear_upsample(values: np.ndarray, scale: int) -> np.ndarray:
    """Pixel-center-aligned bilinear upsampling by an integer factor."""
    h, w = values.shape
    rows = (np.arange(h * scale) + 0.5) / scale - 0.5
    cols = (np.arange(w * scale) + 0.5) / scale - 0.5
    r0 = np.clip(np.floor(rows).astype(int), 0, h - 1)
    c0 = np.clip(np.floor(cols).astype(int), 0, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = np.clip(rows - r0, 0.0, 1.0)[:, None]
    fc = np.clip(cols - c0, 0.0, 1.0)[None, :]
    top = values[r0][:, c0] * (1 - fc) + values[r0][:, c1] * fc
    bottom = values[r1][:, c0] * (1 - fc) + values[r1][:, c1] * fc
    return top * (1 - fr) + bottom * fr


def pansharpen(pan: Band, ms: MultibandImage, scale: int) -> MultibandImage:
    """Sharpen MS bands to pan resolution via least-squares synthetic pan.

    Args:
        pan: high-resolution band, exactly scale x the MS dimensions.
        ms: low-resolution multiband image.
        scale: integer resolution ratio (>= 1).

    Returns:
        MultibandImage with the MS roles at pan resolution.
    """
    if scale < 1:
        raise InputError(f"scale must be >= 1, got {scale}")
    if pan.width != ms.width * scale or pan.height != ms.height * scale:
        raise InputError(
            f"pan {pan.width}x{pan.height} is not {scale}x the MS "
            f"{ms.width}x{ms.height}"
        )
    pan_low = _box_downsample(pan.values, scale)

    columns = [band.values.ravel() for band in ms.bands]
    ms_constant = all(col.min() == col.max() for col in columns)
    if ms_constant and pan_low.min() != pan_low.max():
        raise FusionDegenerateError(
            "all MS bands are constant but pan varies; synthetic-pan fit is "
            "underdetermined"
        )
    design = np.column_stack(columns + [np.ones(pan_low.size)])
    coef, _, _, _ = np.linalg.lstsq(design, pan_low.ravel(), rcond=None)

    sp_low = (design @ coef).reshape(pan_low.shape)
    floor = SP_FLOOR_FACTOR * max(float(pan.values.max()), 1e-6)
    sp_low = np.maximum(sp_low, floor)

    sp_up = _bilinear_upsample(sp_low, scale)
    ratio = pan.values / sp_up
    out = [
        Band(_bilinear_upsample(band.values, scale) * ratio) for band in ms.bands
    ]
    return MultibandImage(out, list(ms.band_roles))


def _first_quartile(sorted_values: np.ndarray) -> float:
    """Linear interpolation at fractional rank 0.25 * (n - 1), zero-indexed."""
    n = sorted_values.size
    rank = 0.25 * (n - 1)
    lo = int(np.floor(rank))
    frac = rank - lo
    if lo + 1 >= n:
        return float(sorted_values[lo])
    return float(sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]))


def contrast_report(
    band: Band, ship_mask: BinaryMask, background_mask: BinaryMask, band_role: str = ""
) -> ContrastReport:
    """Mean and first-quartile reflectance contrast of a ship region.

    The masks must be nonempty and disjoint; the background mean must be
    positive for the ratios to be meaningful.
    """
    ship = band.values[ship_mask.bits]
    background = band.values[background_mask.bits]
    if ship.size == 0:
        raise InputError("ship mask is empty")
    if background.size == 0:
        raise InputError("background mask is empty")
    if np.any(ship_mask.bits & background_mask.bits):
        raise InputError("ship and background masks overlap")
    m_b = float(background.mean())
    if m_b <= 0:
        raise InputError(f"non-positive background mean {m_b}")
    m_t = float(ship.mean())
    q1_t = _first_quartile(np.sort(ship))
    return ContrastReport(
        band_role=band_role,
        m_t=m_t,
        q1_t=q1_t,
        m_b=m_b,
        c_m=m_t / m_b,
        c_q1=q1_t / m_b,
    )


def _jacobi_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a small symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below 1e-12 relative
    to the matrix norm. Returns (eigenvalues, eigenvectors-as-columns),
    unsorted.
    """
    a = matrix.astype(np.float64).copy()
    k = a.shape[0]
    v = np.eye(k)
    if k == 1:
        return np.diag(a).copy(), v
    scale = max(float(np.linalg.norm(a)), 1.0)
    for _ in range(JACOBI_SWEEP_LIMIT):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < 1e-12 * scale:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(k)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude component (first on ties) is positive."""
    out = vectors.copy()
    for i, row in enumerate(out):
        if row[np.argmax(np.abs(row))] < 0:
            out[i] = -row
    return out


def fit_pca(image: MultibandImage) -> PcaModel:
    """Fit a PCA model on the per-pixel band vectors.

    Mean and covariance use the population 1/(N*M) normalization; the
    covariance is diagonalized with cyclic Jacobi rotations (K <= 5 in
    practice).
    """
    data = np.stack([band.values.ravel() for band in image.bands])  # (K, N*M)
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    cov = (centered @ centered.T) / data.shape[1]
    eigenvalues, vectors = _jacobi_eigh(cov)
    eigenvalues = np.where(
        (eigenvalues < 0) & (eigenvalues > -EIGENVALUE_CLAMP_TOL * max(1.0, abs(eigenvalues).max())),
        0.0,
        eigenvalues,
    )
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = _fix_signs(vectors.T[order])
    return PcaModel(mean=mean, eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def first_component(image: MultibandImage, model: PcaModel) -> Band:
    """Project each raw pixel vector on the leading eigenvector.

    The mean is deliberately not subtracted; downstream min-max normalization
    makes the offset irrelevant.
    """
    if model.n_bands != len(image.bands):
        raise InputError(
            f"model has {model.n_bands} bands, image has {len(image.bands)}"
        )
    e1 = model.eigenvectors[0]
    out = np.zeros((image.height, image.width))
    for weight, band in zip(e1, image.bands):
        out += weight * band.values
    return Band(out)

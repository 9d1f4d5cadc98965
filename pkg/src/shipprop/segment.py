"""Automatic threshold selection and morphological cleanup.

Five threshold methods cover the usual families: clustering (Otsu, IsoData),
entropy (Yen), histogram mean, and the locally adaptive Sauvola rule. Global
methods operate on a quantized histogram of the anomaly map; a pixel is
foreground iff its level is strictly above the selected threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from shipprop import kernels
from shipprop.anomaly import AnomalyMap
from shipprop.errors import DegenerateHistogramError, InputError
from shipprop.raster import Band, BinaryMask, quantize_levels

ISODATA_TOLERANCE = 0.5
ISODATA_MAX_ITER = 1000
THRESHOLD_METHODS = ("otsu", "isodata", "yen", "mean", "sauvola")


@dataclass(frozen=True)
class SauvolaParams:
    """Window size b, sensitivity k, and dynamic range R for unit-range maps."""

    window: int = 15
    k: float = 0.5
    r: float = 0.5

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InputError(f"sauvola window must be odd and >= 3, got {self.window}")
        if not 0 < self.k <= 1:
            raise InputError(f"sauvola k must be in (0, 1], got {self.k}")
        if self.r <= 0:
            raise InputError(f"sauvola r must be positive, got {self.r}")


@dataclass(frozen=True)
class ThresholdConfig:
    method: str = "otsu"
    histogram_bins: int = 256
    sauvola: SauvolaParams = field(default_factory=SauvolaParams)

    def __post_init__(self):
        if self.method not in THRESHOLD_METHODS:
            raise InputError(
                f"unknown method {self.method!r}, expected one of {THRESHOLD_METHODS}"
            )
        if self.histogram_bins < 2:
            raise InputError(f"histogram_bins must be >= 2, got {self.histogram_bins}")


def _check_histogram(hist: np.ndarray) -> np.ndarray:
    hist = np.asarray(hist, dtype=np.float64)
    if hist.ndim != 1 or hist.size == 0 or np.any(hist < 0):
        raise InputError("histogram must be a 1-D array of non-negative counts")
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogramError("histogram has fewer than two occupied levels")
    return hist


def threshold_otsu(hist: np.ndarray) -> int:
    """Level maximizing the inter-class variance; smallest level on ties."""
    hist = _check_histogram(hist)
    levels = np.arange(hist.size, dtype=np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    s0 = np.cumsum(hist * levels)
    s1 = s0[-1] - s0
    valid = (w0 > 0) & (w1 > 0)
    criterion = np.zeros(hist.size)
    mu0 = np.divide(s0, w0, out=np.zeros_like(s0), where=valid)
    mu1 = np.divide(s1, w1, out=np.zeros_like(s1), where=valid)
    criterion[valid] = (w0 * w1 * (mu0 - mu1) ** 2)[valid]
    return int(np.argmax(criterion))


def threshold_isodata(hist: np.ndarray) -> int:
    """Ridler-Calvard fixed point: threshold midway between the class means.

    Starts at the histogram mean and iterates T <- (mu_below + mu_above) / 2
    until the change is below half a level (cap 1000 iterations).
    """
    hist = _check_histogram(hist)
    levels = np.arange(hist.size, dtype=np.float64)
    weighted = hist * levels
    t = weighted.sum() / hist.sum()
    for _ in range(ISODATA_MAX_ITER):
        below = levels <= t
        w_below = hist[below].sum()
        w_above = hist[~below].sum()
        if w_below == 0 or w_above == 0:
            break
        new_t = 0.5 * (weighted[below].sum() / w_below + weighted[~below].sum() / w_above)
        if abs(new_t - t) < ISODATA_TOLERANCE:
            t = new_t
            break
        t = new_t
    return int(np.floor(t))


def threshold_yen(hist: np.ndarray) -> int:
    """Level maximizing Yen's entropic correlation criterion; smallest on ties."""
    hist = _check_histogram(hist)
    p = hist / hist.sum()
    p_cum = np.cumsum(p)
    sq_cum = np.cumsum(p * p)
    sq_total = sq_cum[-1]
    best_t, best_tc = -1, -np.inf
    for t in range(hist.size - 1):
        pt = p_cum[t]
        if pt <= 0.0 or pt >= 1.0:
            continue
        g0 = sq_cum[t]
        g1 = sq_total - g0
        if g0 <= 0.0 or g1 <= 0.0:
            continue
        tc = -np.log((g0 * g1) / (pt * pt * (1.0 - pt) * (1.0 - pt)))
        if tc > best_tc:
            best_tc, best_t = tc, t
    if best_t < 0:
        raise DegenerateHistogramError("no valid two-sided split in histogram")
    return best_t


def threshold_mean(hist: np.ndarray) -> int:
    """Floor of the histogram mean level."""
    hist = np.asarray(hist, dtype=np.float64)
    if hist.ndim != 1 or hist.size == 0 or hist.sum() <= 0:
        raise InputError("histogram must contain mass")
    levels = np.arange(hist.size, dtype=np.float64)
    return int(np.floor((hist * levels).sum() / hist.sum()))


def threshold_sauvola(map_: AnomalyMap, cfg: ThresholdConfig) -> BinaryMask:
    """Locally adaptive threshold from windowed mean and SD.

    T(x, y) = m * (1 + k * (s / R - 1)); a pixel is foreground iff its value
    is strictly above T. Windows larger than the image are clamped with a
    warning.
    """
    params = cfg.sauvola
    window = params.window
    smallest = min(map_.height, map_.width)
    if window > smallest:
        window = smallest if smallest % 2 == 1 else smallest - 1
        window = max(window, 1)
        warnings.warn(
            f"sauvola window {params.window} exceeds image; clamped to {window}",
            RuntimeWarning,
            stacklevel=2,
        )
    mean, sd = kernels.local_mean_sd(map_.scores, window)
    threshold = mean * (1.0 + params.k * (sd / params.r - 1.0))
    return BinaryMask(map_.scores > threshold)


_GLOBAL_METHODS = {
    "otsu": threshold_otsu,
    "isodata": threshold_isodata,
    "yen": threshold_yen,
    "mean": threshold_mean,
}


def apply_threshold(map_: AnomalyMap, cfg: ThresholdConfig) -> BinaryMask:
    """Segment an anomaly map with the configured method.

    Global methods quantize the map to histogram_bins levels, pick a level t,
    and mark levels strictly above t as foreground. A histogram too flat to
    split yields an empty mask with a warning rather than an error.
    """
    if cfg.method == "sauvola":
        return threshold_sauvola(map_, cfg)
    quantized = quantize_levels(Band(map_.scores), cfg.histogram_bins)
    values = quantized.values.astype(np.int64)
    hist = np.bincount(values.ravel(), minlength=cfg.histogram_bins)
    try:
        t = _GLOBAL_METHODS[cfg.method](hist)
    except DegenerateHistogramError as exc:
        warnings.warn(f"degenerate histogram, empty mask: {exc}", RuntimeWarning, stacklevel=2)
        return BinaryMask(np.zeros(values.shape, dtype=bool))
    return BinaryMask(values > t)


def morphological_open(mask: BinaryMask, iterations: int = 2) -> BinaryMask:
    """Opening: `iterations` erosions then dilations with the full 3x3 square.

    Out-of-bounds neighbors count as background throughout, so isolated
    specks vanish while compact regions survive unchanged.
    """
    if iterations < 1:
        raise InputError(f"iterations must be >= 1, got {iterations}")
    eroded = kernels.erode3(mask.bits, iterations)
    return BinaryMask(kernels.dilate3(eroded, iterations))

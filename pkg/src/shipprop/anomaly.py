"""Global intensity anomaly, regional texture anomaly, and their combination.

The global score is the reciprocal gray-level frequency of each pixel; the
regional score is the 2x2-mask gradient magnitude with small magnitudes
suppressed below a quantization-noise bound. Both are min-max normalized and
summed, and the sum is normalized again so every downstream threshold method
operates on a common [0, 1] range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from shipprop import kernels
from shipprop.errors import InputError
from shipprop.raster import Band, minmax_scale

DEFAULT_LEVELS = 256


@dataclass(frozen=True)
class SuppressionConfig:
    """Gradient suppression parameters.

    q bounds the gradient error caused by quantization noise (gray levels);
    tau_deg is the tolerated gradient-angle error. Magnitudes below
    rho = q / sin(tau) are treated as texture noise and zeroed.
    """

    q: float = 2.0
    tau_deg: float = 22.5

    def __post_init__(self):
        if self.q <= 0:
            raise InputError(f"q must be positive, got {self.q}")
        if not 0 < self.tau_deg < 90:
            raise InputError(f"tau_deg must be in (0, 90), got {self.tau_deg}")

    @property
    def rho(self) -> float:
        return self.q / math.sin(self.tau_deg * math.pi / 180.0)


@dataclass(eq=False)
class AnomalyMap:
    """Per-pixel abnormality scores; [0, 1] after any normalization stage."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2:
            raise InputError(f"anomaly map must be 2-D, got shape {s.shape}")
        self.scores = s

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def height(self) -> int:
        return self.scores.shape[0]


@dataclass(eq=False)
class GradientField:
    """2x2-mask gradient components and magnitude."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray


def _ensure_quantized(band: Band, levels: int) -> Band:
    from shipprop.raster import quantize_levels

    if band.levels_hint is None:
        return quantize_levels(band, levels)
    return band


def global_anomaly(band: Band, levels: int = DEFAULT_LEVELS) -> AnomalyMap:
    """Reciprocal intensity-frequency score, min-max normalized.

    The band is quantized to `levels` gray levels first unless it already
    carries a levels_hint. Frequencies are counted per scene.
    """
    band = _ensure_quantized(band, levels)
    values = band.values.astype(np.int64)
    counts = np.bincount(values.ravel())
    raw = 1.0 / counts[values]
    return AnomalyMap(minmax_scale(raw))


def gradient_field(band: Band) -> GradientField:
    """Gradients over each 2x2 neighborhood, assigned to the top-left pixel.

    The last row and column carry zeros so the field keeps the band's shape.
    """
    if band.width < 2 or band.height < 2:
        raise InputError(f"band must be at least 2x2, got {band.width}x{band.height}")
    gx, gy, mag = kernels.gradient_field(band.values)
    return GradientField(gx=gx, gy=gy, magnitude=mag)


def suppress_magnitude(magnitude: np.ndarray, rho: float) -> np.ndarray:
    """Zero magnitudes below rho, leaving the rest unchanged (no normalization)."""
    return np.where(magnitude < rho, 0.0, magnitude)


def suppress(field: GradientField, cfg: SuppressionConfig) -> AnomalyMap:
    """Texture-suppressed regional anomaly: threshold at rho, then normalize."""
    return AnomalyMap(minmax_scale(suppress_magnitude(field.magnitude, cfg.rho)))


def combine(regional: AnomalyMap, global_: AnomalyMap) -> AnomalyMap:
    """Pointwise sum of the two normalized maps, renormalized to [0, 1]."""
    if regional.scores.shape != global_.scores.shape:
        raise InputError(
            f"map shapes differ: {regional.scores.shape} vs {global_.scores.shape}"
        )
    return AnomalyMap(minmax_scale(regional.scores + global_.scores))


def anomaly_pipeline(
    band: Band,
    cfg: SuppressionConfig | None = None,
    suppression_enabled: bool = True,
    levels: int = DEFAULT_LEVELS,
) -> AnomalyMap:
    """Full anomaly stage: quantize, score, optionally suppress, combine.

    With suppression disabled the raw gradient magnitude is normalized
    directly, reproducing the ablation variant without the texture term.
    """
    cfg = cfg or SuppressionConfig()
    quantized = _ensure_quantized(band, levels)
    s_global = global_anomaly(quantized, levels)
    field = gradient_field(quantized)
    if suppression_enabled:
        s_regional = suppress(field, cfg)
    else:
        s_regional = AnomalyMap(minmax_scale(field.magnitude))
    return combine(s_regional, s_global)

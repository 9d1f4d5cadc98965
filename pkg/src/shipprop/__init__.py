"""Anomaly-based ship proposal extraction from high-resolution optical imagery.

Pipeline stages: spectral fusion (pan-sharpening, contrast analysis, PCA),
combined global/regional anomaly maps with texture suppression, automatic
thresholding, morphological cleanup, rotated-box proposal extraction, and
proposal-quality evaluation. A seeded synthetic-scene generator supports
reproducible benchmarks.
"""

__version__ = "0.1.0"

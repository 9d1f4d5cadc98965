"""NumPy implementation of the per-pixel kernels.

Fallback backend used when the compiled extension is unavailable; same
signatures and semantics as ``shipprop._kernels_c``.
"""

from __future__ import annotations

import numpy as np


def gradient_field(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2x2-mask gradients assigned to the top-left pixel; last row/col zero.

    Returns (gx, gy, magnitude) as float64 arrays with the input's shape.
    """
    a = np.asarray(a, dtype=np.float64)
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[:-1, :-1] = (a[:-1, 1:] + a[1:, 1:] - a[:-1, :-1] - a[1:, :-1]) / 2.0
    gy[:-1, :-1] = (a[1:, :-1] + a[1:, 1:] - a[:-1, :-1] - a[:-1, 1:]) / 2.0
    mag = np.sqrt(gx * gx + gy * gy)
    return gx, gy, mag


def _shift_stack(padded: np.ndarray, h: int, w: int):
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            yield padded[dy : dy + h, dx : dx + w]


def erode3(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Binary erosion with the full 3x3 square; out-of-bounds is background."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    for _ in range(iterations):
        padded = np.pad(m, 1, constant_values=False)
        out = np.ones((h, w), dtype=bool)
        for shifted in _shift_stack(padded, h, w):
            out &= shifted
        m = out
    return m


def dilate3(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Binary dilation with the full 3x3 square; out-of-bounds is background."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    for _ in range(iterations):
        padded = np.pad(m, 1, constant_values=False)
        out = np.zeros((h, w), dtype=bool)
        for shifted in _shift_stack(padded, h, w):
            out |= shifted
        m = out
    return m


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labels, assigned in raster order of first pixel.

    Returns (labels, count) where labels is int32 with 0 for background and
    1..count for foreground components.
    """
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for r0 in range(h):
        row = m[r0]
        for c0 in range(w):
            if not row[c0] or labels[r0, c0]:
                continue
            count += 1
            stack = [(r0, c0)]
            labels[r0, c0] = count
            while stack:
                r, c = stack.pop()
                for rr in range(max(r - 1, 0), min(r + 2, h)):
                    for cc in range(max(c - 1, 0), min(c + 2, w)):
                        if m[rr, cc] and not labels[rr, cc]:
                            labels[rr, cc] = count
                            stack.append((rr, cc))
    return labels, count


def local_mean_sd(a: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and population SD over an edge-clamped window x window box.

    Integral images give O(1) work per pixel.
    """
    a = np.asarray(a, dtype=np.float64)
    h, w = a.shape
    half = window // 2

    s1 = np.zeros((h + 1, w + 1))
    s2 = np.zeros((h + 1, w + 1))
    s1[1:, 1:] = np.cumsum(np.cumsum(a, axis=0), axis=1)
    s2[1:, 1:] = np.cumsum(np.cumsum(a * a, axis=0), axis=1)

    rows = np.arange(h)
    cols = np.arange(w)
    r0 = np.clip(rows - half, 0, h)[:, None]
    r1 = np.clip(rows + half + 1, 0, h)[:, None]
    c0 = np.clip(cols - half, 0, w)[None, :]
    c1 = np.clip(cols + half + 1, 0, w)[None, :]

    n = (r1 - r0) * (c1 - c0)
    box1 = s1[r1, c1] - s1[r0, c1] - s1[r1, c0] + s1[r0, c0]
    box2 = s2[r1, c1] - s2[r0, c1] - s2[r1, c0] + s2[r0, c0]
    mean = box1 / n
    var = np.maximum(box2 / n - mean * mean, 0.0)
    return mean, np.sqrt(var)

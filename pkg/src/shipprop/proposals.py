"""Ship proposals: connected regions, minimum rotated boxes, shape filtering.

Pixels are treated as unit squares (corners at integer offsets +-0.5), so a
single-pixel region still has a well-defined 1x1 box and a length/width
ratio. Regions are 8-connected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shipprop import kernels
from shipprop.anomaly import AnomalyMap
from shipprop.errors import InputError
from shipprop.raster import BinaryMask


@dataclass(frozen=True)
class RotatedBox:
    """Minimum-area oriented rectangle; length >= width, angle in [0, 180)."""

    cx: float
    cy: float
    length: float
    width: float
    angle_deg: float


@dataclass(eq=False)
class Proposal:
    """Connected region with its box, shape features, and anomaly score."""

    pixels: np.ndarray  # (n, 2) int array of (x, y)
    box: RotatedBox
    length_width_ratio: float
    score: float

    @property
    def area_px(self) -> int:
        return self.pixels.shape[0]

    def to_dict(self) -> dict:
        return {
            "cx": self.box.cx,
            "cy": self.box.cy,
            "length": self.box.length,
            "width": self.box.width,
            "angle_deg": self.box.angle_deg,
            "ratio": self.length_width_ratio,
            "area_px": self.area_px,
            "score": self.score,
        }


@dataclass(frozen=True)
class FilterConfig:
    """Acceptance bounds for length, width, ratio, and pixel area."""

    min_length: float = 2.0
    max_length: float = 128.0
    min_width: float = 1.0
    max_width: float = 64.0
    min_ratio: float = 1.0
    max_ratio: float = 15.0
    min_area_px: int = 3

    def __post_init__(self):
        for lo, hi, name in (
            (self.min_length, self.max_length, "length"),
            (self.min_width, self.max_width, "width"),
            (self.min_ratio, self.max_ratio, "ratio"),
        ):
            if lo <= 0 or hi < lo:
                raise InputError(f"invalid {name} bounds [{lo}, {hi}]")
        if self.min_area_px < 1:
            raise InputError(f"min_area_px must be >= 1, got {self.min_area_px}")


def connected_components(mask: BinaryMask) -> list[np.ndarray]:
    """8-connected components as (n, 2) arrays of (x, y), raster order.

    Components are ordered by their first pixel in raster scan; pixels within
    a component are raster-sorted.
    """
    labels, count = kernels.label_components(mask.bits)
    out = []
    for label in range(1, count + 1):
        rows, cols = np.nonzero(labels == label)
        out.append(np.column_stack([cols, rows]).astype(np.int64))
    return out


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices in CCW order."""
    pts = np.unique(points, axis=0)  # sorts lexicographically (x, then y)
    if pts.shape[0] <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def min_rotated_box(pixels: np.ndarray) -> RotatedBox:
    """Minimum-area rotated rectangle over the pixels' unit-square corners.

    Rotating calipers over the corner convex hull: the optimal rectangle has
    one side collinear with a hull edge. The long side defines the angle,
    normalized into [0, 180).
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.size == 0:
        raise InputError("empty pixel set")
    offsets = np.array([[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]])
    corners = (pixels[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    hull = _convex_hull(corners)

    edges = np.roll(hull, -1, axis=0) - hull
    best = None
    for ex, ey in edges:
        norm = np.hypot(ex, ey)
        if norm == 0:
            continue
        ux, uy = ex / norm, ey / norm
        proj_u = hull[:, 0] * ux + hull[:, 1] * uy
        proj_v = -hull[:, 0] * uy + hull[:, 1] * ux
        su = proj_u.max() - proj_u.min()
        sv = proj_v.max() - proj_v.min()
        area = su * sv
        if best is None or area < best[0]:
            mid_u = 0.5 * (proj_u.max() + proj_u.min())
            mid_v = 0.5 * (proj_v.max() + proj_v.min())
            best = (area, su, sv, ux, uy, mid_u, mid_v)

    _, su, sv, ux, uy, mid_u, mid_v = best
    cx = mid_u * ux - mid_v * uy
    cy = mid_u * uy + mid_v * ux
    if su >= sv:
        length, width = su, sv
        angle = np.degrees(np.arctan2(uy, ux))
    else:
        length, width = sv, su
        angle = np.degrees(np.arctan2(ux, -uy))  # v-axis direction
    return RotatedBox(
        cx=float(cx),
        cy=float(cy),
        length=float(length),
        width=float(width),
        angle_deg=float(angle % 180.0),
    )


def filter_false_alarms(
    proposals: list[Proposal], cfg: FilterConfig | None = None
) -> list[Proposal]:
    """Keep proposals whose shape features fall within the configured bounds."""
    cfg = cfg or FilterConfig()
    kept = []
    for p in proposals:
        if not cfg.min_length <= p.box.length <= cfg.max_length:
            continue
        if not cfg.min_width <= p.box.width <= cfg.max_width:
            continue
        if not cfg.min_ratio <= p.length_width_ratio <= cfg.max_ratio:
            continue
        if p.area_px < cfg.min_area_px:
            continue
        kept.append(p)
    return kept


def extract_proposals(
    mask: BinaryMask, anomaly: AnomalyMap, cfg: FilterConfig | None = None
) -> list[Proposal]:
    """Label the mask, box and score each region, and filter false alarms.

    Proposals are sorted by mean anomaly score descending, ties keeping
    raster order.
    """
    if (mask.height, mask.width) != anomaly.scores.shape:
        raise InputError("mask and anomaly map dimensions differ")
    candidates = []
    for pixels in connected_components(mask):
        box = min_rotated_box(pixels)
        score = float(anomaly.scores[pixels[:, 1], pixels[:, 0]].mean())
        candidates.append(
            Proposal(
                pixels=pixels,
                box=box,
                length_width_ratio=box.length / box.width,
                score=score,
            )
        )
    kept = filter_false_alarms(candidates, cfg)
    return sorted(kept, key=lambda p: -p.score)

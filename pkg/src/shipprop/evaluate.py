"""Proposal-quality metrics: pixel-set IoU, matching, recall/precision/F1.

Ground truth is a list of simple polygons rasterized by the center-in-polygon
rule (even-odd, boundary inclusive). Matching is greedy one-to-one by IoU;
a proposal counts as detected only when IoU is strictly above the threshold.
Average recall is the mean recall over an IoU-threshold grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from shipprop.errors import InputError
from shipprop.proposals import Proposal

DEFAULT_T_GRID = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
_EDGE_EPS = 1e-9


def _point_in_polygon(x: float, y: float, poly: np.ndarray) -> bool:
    """Even-odd rule with points on an edge counting as inside."""
    n = poly.shape[0]
    inside = False
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # on-segment check
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if abs(cross) <= _EDGE_EPS * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
            if min(x1, x2) - _EDGE_EPS <= x <= max(x1, x2) + _EDGE_EPS and (
                min(y1, y2) - _EDGE_EPS <= y <= max(y1, y2) + _EDGE_EPS
            ):
                return True
        # horizontal ray toward +x
        if (y1 > y) != (y2 > y):
            x_int = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_int > x:
                inside = not inside
    return inside


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) <= _EDGE_EPS else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4


def rasterize_polygon(poly: np.ndarray) -> frozenset:
    """Pixel (x, y) coordinates whose integer centers fall inside the polygon."""
    poly = np.asarray(poly, dtype=np.float64)
    x_lo = int(np.floor(poly[:, 0].min()))
    x_hi = int(np.ceil(poly[:, 0].max()))
    y_lo = int(np.floor(poly[:, 1].min()))
    y_hi = int(np.ceil(poly[:, 1].max()))
    pixels = [
        (x, y)
        for y in range(y_lo, y_hi + 1)
        for x in range(x_lo, x_hi + 1)
        if _point_in_polygon(float(x), float(y), poly)
    ]
    return frozenset(pixels)


@dataclass(frozen=True)
class GtAnnotation:
    id: str
    polygon: np.ndarray

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=np.float64)
        if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
            raise InputError(f"polygon {self.id!r} needs >= 3 (x, y) vertices")
        n = poly.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if abs(i - j) in (1, n - 1):
                    continue  # adjacent edges share a vertex
                if _segments_intersect(
                    poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]
                ):
                    raise InputError(f"polygon {self.id!r} is self-intersecting")
        object.__setattr__(self, "polygon", poly)


class GroundTruth:
    """Manually labeled ship polygons with lazy rasterization."""

    def __init__(self, annotations: list[GtAnnotation]):
        self.annotations = list(annotations)

    def __len__(self) -> int:
        return len(self.annotations)

    @cached_property
    def pixel_sets(self) -> list[frozenset]:
        sets = []
        for ann in self.annotations:
            pixels = rasterize_polygon(ann.polygon)
            if not pixels:
                raise InputError(f"polygon {ann.id!r} rasterizes to no pixels")
            sets.append(pixels)
        return sets

    @classmethod
    def from_json(cls, path) -> "GroundTruth":
        doc = json.loads(Path(path).read_text())
        anns = []
        for entry in doc:
            try:
                anns.append(GtAnnotation(id=str(entry["id"]), polygon=entry["polygon"]))
            except (TypeError, KeyError):
                raise InputError(f"GT entry needs 'id' and 'polygon': {entry!r}") from None
        return cls(anns)

    def to_json_obj(self) -> list:
        return [
            {"id": ann.id, "polygon": [[float(x), float(y)] for x, y in ann.polygon]}
            for ann in self.annotations
        ]


def iou(a, b) -> float:
    """Intersection-over-union of two nonempty pixel sets."""
    sa = a if isinstance(a, frozenset) else frozenset(map(tuple, np.asarray(a)))
    sb = b if isinstance(b, frozenset) else frozenset(map(tuple, np.asarray(b)))
    if not sa or not sb:
        raise InputError("iou of an empty pixel set is undefined")
    inter = len(sa & sb)
    return inter / (len(sa) + len(sb) - inter)


@dataclass(frozen=True)
class Matching:
    pairs: list[tuple[int, int]]  # (proposal index, gt index)
    unmatched_proposals: list[int]
    unmatched_gt: list[int]


def _iou_matrix(proposals: list[Proposal], gt_sets: list[frozenset]) -> np.ndarray:
    mat = np.zeros((len(proposals), len(gt_sets)))
    prop_sets = [frozenset(map(tuple, p.pixels)) for p in proposals]
    for i, ps in enumerate(prop_sets):
        for j, gs in enumerate(gt_sets):
            mat[i, j] = iou(ps, gs)
    return mat


def match_proposals(
    proposals: list[Proposal], gt: GroundTruth, t: float, iou_matrix: np.ndarray | None = None
) -> Matching:
    """Greedy one-to-one matching of proposals to ground truth at IoU > t.

    Candidate pairs are taken by descending IoU; ties fall back to proposal
    order (score-descending, then raster) and GT order.
    """
    mat = _iou_matrix(proposals, gt.pixel_sets) if iou_matrix is None else iou_matrix
    candidates = [
        (i, j)
        for i in range(mat.shape[0])
        for j in range(mat.shape[1])
        if mat[i, j] > t
    ]
    candidates.sort(key=lambda ij: (-mat[ij[0], ij[1]], ij[0], ij[1]))
    matched_p, matched_g, pairs = set(), set(), []
    for i, j in candidates:
        if i in matched_p or j in matched_g:
            continue
        matched_p.add(i)
        matched_g.add(j)
        pairs.append((i, j))
    return Matching(
        pairs=pairs,
        unmatched_proposals=[i for i in range(mat.shape[0]) if i not in matched_p],
        unmatched_gt=[j for j in range(mat.shape[1]) if j not in matched_g],
    )


@dataclass(frozen=True)
class EvalReport:
    """Metrics at T = 0.5 plus the recall sweep over the T grid."""

    recall_05: float
    precision_05: float
    f1_05: float
    average_recall: float
    per_t_recall: list[tuple[float, float]]
    detected: int
    missed: int
    false_alarms: int
    degenerate_precision: bool

    def to_dict(self) -> dict:
        return {
            "recall_05": self.recall_05,
            "precision_05": self.precision_05,
            "f1_05": self.f1_05,
            "average_recall": self.average_recall,
            "per_t_recall": [[t, r] for t, r in self.per_t_recall],
            "counts": {
                "detected": self.detected,
                "missed": self.missed,
                "false_alarms": self.false_alarms,
            },
            "degenerate_precision": self.degenerate_precision,
        }


@dataclass(frozen=True)
class MatchCounts:
    """Raw matching counts for one scene (or a sum of scenes).

    Scenes are merged by summing counts, so multi-scene metrics pool every
    ground-truth ship rather than averaging per-scene rates.
    """

    t_grid: tuple
    detected_per_t: tuple
    n_gt: int
    n_proposals: int

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        if self.t_grid != other.t_grid:
            raise InputError("cannot merge counts over different T grids")
        return MatchCounts(
            t_grid=self.t_grid,
            detected_per_t=tuple(
                a + b for a, b in zip(self.detected_per_t, other.detected_per_t)
            ),
            n_gt=self.n_gt + other.n_gt,
            n_proposals=self.n_proposals + other.n_proposals,
        )


def count_matches(
    proposals: list[Proposal], gt: GroundTruth, t_grid=DEFAULT_T_GRID
) -> MatchCounts:
    """Matching counts at every grid threshold. T = 0.5 must be on the grid."""
    if 0.5 not in t_grid:
        raise InputError("the T grid must contain 0.5")
    mat = _iou_matrix(proposals, gt.pixel_sets)
    detected = tuple(
        len(match_proposals(proposals, gt, t, iou_matrix=mat).pairs) for t in t_grid
    )
    return MatchCounts(
        t_grid=tuple(float(t) for t in t_grid),
        detected_per_t=detected,
        n_gt=len(gt),
        n_proposals=len(proposals),
    )


def report_from_counts(counts: MatchCounts) -> EvalReport:
    """Turn (possibly merged) matching counts into rates."""
    per_t = [
        (t, d / counts.n_gt if counts.n_gt else 0.0)
        for t, d in zip(counts.t_grid, counts.detected_per_t)
    ]
    detected = counts.detected_per_t[counts.t_grid.index(0.5)]
    missed = counts.n_gt - detected
    false_alarms = counts.n_proposals - detected
    recall_05 = detected / counts.n_gt if counts.n_gt else 0.0
    degenerate = counts.n_proposals == 0
    precision_05 = detected / counts.n_proposals if counts.n_proposals else 0.0
    denom = recall_05 + precision_05
    f1_05 = 2.0 * recall_05 * precision_05 / denom if denom > 0 else 0.0
    return EvalReport(
        recall_05=recall_05,
        precision_05=precision_05,
        f1_05=f1_05,
        average_recall=float(np.mean([r for _, r in per_t])) if per_t else 0.0,
        per_t_recall=per_t,
        detected=detected,
        missed=missed,
        false_alarms=false_alarms,
        degenerate_precision=degenerate,
    )


def evaluate(
    proposals: list[Proposal], gt: GroundTruth, t_grid=DEFAULT_T_GRID
) -> EvalReport:
    """Score proposals against ground truth.

    Precision with zero proposals is reported as 0 with the degenerate flag
    set instead of propagating NaN.
    """
    return report_from_counts(count_matches(proposals, gt, t_grid))

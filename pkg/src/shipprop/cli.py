"""Command-line orchestration of the full detection pipeline.

Subcommands: detect (manifest -> proposals JSON), contrast (per-band
ship/background contrast), eval (proposals vs ground truth), bench (the
variant x threshold-method grid over a scene directory), and synth (scene
generation). All reports are JSON-first; bench also emits an aligned text
table. Outputs are byte-identical across reruns with the same inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from shipprop import synth
from shipprop.anomaly import AnomalyMap, SuppressionConfig, anomaly_pipeline
from shipprop.errors import DegenerateDataError, InputError, ShipPropError
from shipprop.evaluate import (
    DEFAULT_T_GRID,
    GroundTruth,
    MatchCounts,
    count_matches,
    evaluate,
    report_from_counts,
)
from shipprop.fusion import contrast_report, first_component, fit_pca
from shipprop.proposals import FilterConfig, Proposal, RotatedBox, extract_proposals
from shipprop.raster import (
    Band,
    BinaryMask,
    MultibandImage,
    minmax_scale,
    read_manifest,
    read_pgm,
    write_pgm,
)
from shipprop.segment import (
    SauvolaParams,
    ThresholdConfig,
    apply_threshold,
    morphological_open,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

VARIANTS = ("pan", "panir")
BENCH_VARIANTS = ("pan-wotas", "panir-wotas", "pan-wtas", "panir-wtas")
DEFAULT_BENCH_METHODS = ("otsu", "isodata", "yen")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything cmd_detect needs: band selection, anomaly, segmentation,
    filtering, and the optional land mask."""

    variant: str = "panir"
    suppression: bool = True
    q: float = 2.0
    tau_deg: float = 22.5
    levels: int = 256
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    morph_iterations: int = 2
    land_mask: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.morph_iterations < 1:
            raise InputError("morph_iterations must be >= 1")

    @property
    def suppression_config(self) -> SuppressionConfig:
        return SuppressionConfig(q=self.q, tau_deg=self.tau_deg)

    @classmethod
    def from_json_obj(cls, doc: dict) -> "PipelineConfig":
        sauvola = doc.get("sauvola", {})
        filt = doc.get("filter", {})
        return cls(
            variant=doc.get("variant", "panir"),
            suppression=bool(doc.get("suppression", True)),
            q=float(doc.get("q", 2.0)),
            tau_deg=float(doc.get("tau_deg", 22.5)),
            levels=int(doc.get("levels", 256)),
            threshold=ThresholdConfig(
                method=doc.get("threshold_method", "otsu"),
                histogram_bins=int(doc.get("bins", 256)),
                sauvola=SauvolaParams(
                    window=int(sauvola.get("window", 15)),
                    k=float(sauvola.get("k", 0.5)),
                    r=float(sauvola.get("r", 0.5)),
                ),
            ),
            filter=FilterConfig(
                min_length=float(filt.get("min_length", 2.0)),
                max_length=float(filt.get("max_length", 128.0)),
                min_width=float(filt.get("min_width", 1.0)),
                max_width=float(filt.get("max_width", 64.0)),
                min_ratio=float(filt.get("min_ratio", 1.0)),
                max_ratio=float(filt.get("max_ratio", 15.0)),
                min_area_px=int(filt.get("min_area_px", 3)),
            ),
            morph_iterations=int(doc.get("morph_iterations", 2)),
            land_mask=doc.get("land_mask"),
        )


def select_band(image: MultibandImage, variant: str) -> Band:
    """Pick the detector input: the pan band, or the first PCA component."""
    if variant == "pan":
        if "pan" in image.band_roles:
            return image.band("pan")
        if len(image.bands) == 1:
            return image.bands[0]
        raise InputError("variant 'pan' needs a band with role 'pan'")
    if len(image.bands) < 2:
        raise InputError("variant 'panir' needs at least two bands")
    model = fit_pca(image)
    return first_component(image, model)


def run_pipeline(
    image: MultibandImage,
    config: PipelineConfig,
    land_mask: BinaryMask | None = None,
) -> tuple[list[Proposal], AnomalyMap, BinaryMask]:
    """Full detection chain on an in-memory image.

    Returns (proposals, anomaly map, cleaned binary mask). The land mask is
    applied after morphology so the global histogram statistics stay
    comparable between masked and unmasked runs.
    """
    band = select_band(image, config.variant)
    amap = anomaly_pipeline(
        band,
        config.suppression_config,
        suppression_enabled=config.suppression,
        levels=config.levels,
    )
    mask = apply_threshold(amap, config.threshold)
    mask = morphological_open(mask, config.morph_iterations)
    if land_mask is not None:
        if (land_mask.height, land_mask.width) != (mask.height, mask.width):
            raise InputError("land mask dimensions do not match the image")
        mask = BinaryMask(mask.bits & ~land_mask.bits)
    return extract_proposals(mask, amap, config.filter), amap, mask


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _draw_overlay(band: Band, proposals: list[Proposal]) -> Band:
    """Grayscale overlay: the band stretched to 8 bits with box outlines at 255."""
    canvas = np.floor(minmax_scale(band.values) * 254.0 + 0.5)
    h, w = canvas.shape
    for p in proposals:
        box = p.box
        theta = np.radians(box.angle_deg)
        u = np.array([np.cos(theta), np.sin(theta)])
        v = np.array([-u[1], u[0]])
        c = np.array([box.cx, box.cy])
        corners = [
            c - box.length / 2 * u - box.width / 2 * v,
            c + box.length / 2 * u - box.width / 2 * v,
            c + box.length / 2 * u + box.width / 2 * v,
            c - box.length / 2 * u + box.width / 2 * v,
        ]
        for a, b in zip(corners, corners[1:] + corners[:1]):
            steps = max(int(np.hypot(*(b - a)) * 4), 1)
            for s in range(steps + 1):
                x, y = a + (b - a) * s / steps
                xi, yi = int(round(x)), int(round(y))
                if 0 <= xi < w and 0 <= yi < h:
                    canvas[yi, xi] = 255.0
    return Band(canvas, levels_hint=256)


def _load_config(args) -> PipelineConfig:
    doc = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        doc = json.loads(path.read_text())
    config = PipelineConfig.from_json_obj(doc)
    if getattr(args, "variant", None):
        config = replace(config, variant=args.variant)
    if getattr(args, "suppression", None):
        config = replace(config, suppression=args.suppression == "on")
    if getattr(args, "threshold", None):
        config = replace(config, threshold=replace(config.threshold, method=args.threshold))
    if getattr(args, "land_mask", None):
        config = replace(config, land_mask=args.land_mask)
    return config


def cmd_detect(args) -> int:
    config = _load_config(args)
    manifest = Path(args.manifest)
    if not manifest.is_file():
        raise InputError(f"manifest not found: {manifest}")
    image = read_manifest(manifest)
    land = None
    if config.land_mask:
        land_path = Path(config.land_mask)
        if not land_path.is_file():
            raise InputError(f"land mask not found: {land_path}")
        land = BinaryMask(read_pgm(land_path).values > 0)
    proposals, amap, mask = run_pipeline(image, config, land)
    _write_json(args.out, [p.to_dict() for p in proposals])
    if args.mask_out:
        write_pgm(Band(mask.bits.astype(np.float64), levels_hint=2), args.mask_out, maxval=1)
    if args.overlay_out:
        overlay_source = image.band("pan") if "pan" in image.band_roles else image.bands[0]
        write_pgm(_draw_overlay(overlay_source, proposals), args.overlay_out, maxval=255)
    return EXIT_OK


def _gt_ship_bits(gt: GroundTruth, width: int, height: int) -> list[np.ndarray]:
    bits_list = []
    for pixels in gt.pixel_sets:
        bits = np.zeros((height, width), dtype=bool)
        for x, y in pixels:
            if 0 <= x < width and 0 <= y < height:
                bits[y, x] = True
        if not bits.any():
            raise InputError("a ground-truth polygon lies outside the image")
        bits_list.append(bits)
    return bits_list


def cmd_contrast(args) -> int:
    image = read_manifest(args.manifest)
    gt = GroundTruth.from_json(args.gt)
    if len(gt) == 0:
        raise InputError("ground truth is empty; nothing to contrast")
    ship_bits = _gt_ship_bits(gt, image.width, image.height)
    rings = synth.background_rings(ship_bits)
    bands_out = []
    for role in image.band_roles:
        band = image.band(role)
        reports = []
        for idx, (ship, ring) in enumerate(zip(ship_bits, rings)):
            report = contrast_report(
                band, BinaryMask(ship), BinaryMask(ring), band_role=role
            )
            reports.append({"ship_id": gt.annotations[idx].id, **report.to_dict()})
        bands_out.append(
            {
                "band_role": role,
                "mean_c_m": float(np.mean([r["c_m"] for r in reports])),
                "mean_c_q1": float(np.mean([r["c_q1"] for r in reports])),
                "ships": reports,
            }
        )
    _write_json(args.out, {"bands": bands_out})
    return EXIT_OK


def _box_pixels(entry: dict) -> frozenset:
    """Pixel set of a proposal reconstructed by rasterizing its rotated box."""
    box = RotatedBox(
        cx=entry["cx"],
        cy=entry["cy"],
        length=entry["length"],
        width=entry["width"],
        angle_deg=entry["angle_deg"],
    )
    theta = np.radians(box.angle_deg)
    u = np.array([np.cos(theta), np.sin(theta)])
    v = np.array([-u[1], u[0]])
    c = np.array([box.cx, box.cy])
    poly = np.array(
        [
            c - box.length / 2 * u - box.width / 2 * v,
            c + box.length / 2 * u - box.width / 2 * v,
            c + box.length / 2 * u + box.width / 2 * v,
            c - box.length / 2 * u + box.width / 2 * v,
        ]
    )
    from shipprop.evaluate import rasterize_polygon

    return rasterize_polygon(poly)


def cmd_eval(args) -> int:
    entries = json.loads(Path(args.proposals).read_text())
    gt = GroundTruth.from_json(args.gt)
    proposals = []
    for entry in entries:
        pixels = np.array(sorted(_box_pixels(entry), key=lambda p: (p[1], p[0])))
        if pixels.size == 0:
            continue
        proposals.append(
            Proposal(
                pixels=pixels,
                box=RotatedBox(
                    cx=entry["cx"],
                    cy=entry["cy"],
                    length=entry["length"],
                    width=entry["width"],
                    angle_deg=entry["angle_deg"],
                ),
                length_width_ratio=entry["ratio"],
                score=entry["score"],
            )
        )
    proposals.sort(key=lambda p: -p.score)
    report = evaluate(proposals, gt)
    _write_json(args.out, report.to_dict())
    return EXIT_OK


def _bench_variant_config(token: str, base: PipelineConfig) -> PipelineConfig:
    bands, _, suffix = token.partition("-")
    if bands not in VARIANTS or suffix not in ("wtas", "wotas"):
        raise InputError(
            f"unknown bench variant {token!r}; expected e.g. 'panir-wtas'"
        )
    return replace(base, variant=bands, suppression=suffix == "wtas")


def _bench_scene(scene_dir: Path, configs: dict, t_grid) -> dict:
    image = read_manifest(scene_dir / "manifest.json")
    gt = GroundTruth.from_json(scene_dir / "gt.json")
    counts = {}
    for key, config in configs.items():
        proposals, _, _ = run_pipeline(image, config)
        counts[key] = count_matches(proposals, gt, t_grid)
    return counts


def cmd_bench(args) -> int:
    scene_root = Path(args.scenes)
    scene_dirs = sorted(d for d in scene_root.iterdir() if (d / "manifest.json").is_file())
    if not scene_dirs:
        raise InputError(f"no scenes (subdirectories with manifest.json) in {scene_root}")
    base = _load_config(args)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    configs = {}
    for token in variants:
        for method in methods:
            cfg = _bench_variant_config(token, base)
            configs[(token, method)] = replace(
                cfg, threshold=replace(cfg.threshold, method=method)
            )

    t_grid = DEFAULT_T_GRID
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        per_scene = list(
            pool.map(lambda d: _bench_scene(d, configs, t_grid), scene_dirs)
        )

    cells = []
    ar_by_variant: dict[str, list[float]] = {v: [] for v in variants}
    for token in variants:
        for method in methods:
            merged: MatchCounts | None = None
            for scene_counts in per_scene:
                c = scene_counts[(token, method)]
                merged = c if merged is None else merged + c
            report = report_from_counts(merged)
            ar_by_variant[token].append(report.average_recall)
            cells.append(
                {
                    "variant": token,
                    "method": method,
                    "average_recall": report.average_recall,
                    "recall_05": report.recall_05,
                    "precision_05": report.precision_05,
                    "f1_05": report.f1_05,
                    "counts": {
                        "detected": report.detected,
                        "missed": report.missed,
                        "false_alarms": report.false_alarms,
                    },
                }
            )
    summary = []
    for token in variants:
        ars = np.array(ar_by_variant[token])
        summary.append(
            {
                "variant": token,
                "ar_mean": float(ars.mean()),
                "ar_sd": float(ars.std(ddof=1)) if ars.size > 1 else 0.0,
            }
        )
    doc = {
        "scene_count": len(scene_dirs),
        "t_grid": list(t_grid),
        "methods": methods,
        "variants": variants,
        "cells": cells,
        "variant_summary": summary,
    }
    _write_json(args.out, doc)
    table = _format_bench_table(methods, variants, cells, summary)
    if args.table:
        Path(args.table).write_text(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _format_bench_table(methods, variants, cells, summary) -> str:
    """Aligned text table: threshold methods as rows, variants as columns,
    average recall in percent, closed by the mean +- SD row."""
    by_cell = {(c["variant"], c["method"]): c for c in cells}
    col_width = max(14, *(len(v) + 2 for v in variants))
    lines = ["AR%".ljust(10) + "".join(v.rjust(col_width) for v in variants)]
    for method in methods:
        row = method.ljust(10)
        for v in variants:
            row += f"{by_cell[(v, method)]['average_recall'] * 100:.2f}".rjust(col_width)
        lines.append(row)
    row = "#mean+SD".ljust(10)
    for entry in summary:
        cell = f"{entry['ar_mean'] * 100:.2f} (+-{entry['ar_sd'] * 100:.2f})"
        row += cell.rjust(col_width)
    lines.append(row)
    return "\n".join(lines) + "\n"


def cmd_synth(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise InputError(f"scene spec not found: {spec_path}")
    spec = synth.SceneSpec.from_json(spec_path)
    out_root = Path(args.out_dir)
    for i in range(args.count):
        seed = (args.seed if args.seed is not None else spec.seed) + i
        scene = synth.generate(replace(spec, seed=seed))
        synth.write_scene(scene, out_root / f"scene_{i:03d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shipprop", description="Anomaly-based ship proposal extraction."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--variant", choices=VARIANTS)
        p.add_argument("--suppression", choices=("on", "off"))
        p.add_argument("--threshold", choices=("otsu", "isodata", "yen", "mean", "sauvola"))
        p.add_argument("--land-mask", dest="land_mask", help="PGM land mask (nonzero = land)")

    p = sub.add_parser("detect", help="run the detection pipeline on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="proposals JSON output")
    p.add_argument("--mask-out", dest="mask_out", help="optional binary mask PGM")
    p.add_argument("--overlay-out", dest="overlay_out", help="optional overlay PGM")
    add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("contrast", help="per-band ship/background contrast report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gt", required=True, help="ground-truth polygons JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_contrast)

    p = sub.add_parser("eval", help="score proposals JSON against ground truth")
    p.add_argument("--proposals", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="variant x threshold grid over a scene directory")
    p.add_argument("--scenes", required=True, help="directory of scene subdirectories")
    p.add_argument("--out", required=True, help="benchmark JSON output")
    p.add_argument("--table", help="write the text table here instead of stdout")
    p.add_argument("--variants", default=",".join(BENCH_VARIANTS))
    p.add_argument("--methods", default=",".join(DEFAULT_BENCH_METHODS))
    p.add_argument("--workers", type=int, default=4)
    add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate synthetic scenes from a spec JSON")
    p.add_argument("--spec", required=True, help="SceneSpec JSON")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--count", type=int, default=1, help="scenes to emit (seed, seed+1, ...)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ShipPropError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

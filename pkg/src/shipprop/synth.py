"""Seeded synthetic ocean scenes with known ship ground truth.

Scenes are deterministic functions of (spec, seed): all randomness comes from
a PCG64 generator (NumPy's default 64-bit PRNG) seeded once per scene, with a
fixed draw order (pan noise, nir noise, nir spectral noise, then per-ship
texture in list order). Ships are filled rotated rectangles painted through
the same polygon rasterization used for evaluation, so the ground truth and
the painted pixels agree exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from shipprop import kernels
from shipprop.errors import InputError
from shipprop.evaluate import GroundTruth, GtAnnotation, rasterize_polygon
from shipprop.raster import Band, BinaryMask, MultibandImage

WAVE_DIRECTION_DEG = 30.0
BACKGROUND_RING_DILATIONS = 5


@dataclass(frozen=True)
class WakeSpec:
    """Fading streak behind the stern: pixel length and peak added intensity."""

    length: int
    intensity: float


@dataclass(frozen=True)
class ShipSpec:
    """One rotated-rectangle ship.

    target_mcr scales the ship's mean over the background mean on the pan
    band; nir_mcr_boost multiplies that contrast on the nir band.
    intra_ship_sd adds Gaussian texture; deck_amp adds a +-amp luminance
    stripe by pixel-column parity, mimicking container/hatch structure (both
    are zero-mean, so the painted mean stays on target).
    """

    cx: float
    cy: float
    length: float
    width: float
    angle_deg: float = 0.0
    target_mcr: float = 2.0
    nir_mcr_boost: float = 1.0
    intra_ship_sd: float = 0.0
    deck_amp: float = 0.0
    wake: WakeSpec | None = None

    def __post_init__(self):
        if self.target_mcr <= 0:
            raise InputError(f"target_mcr must be positive, got {self.target_mcr}")
        if self.length <= 0 or self.width <= 0:
            raise InputError("ship length and width must be positive")

    def polygon(self) -> np.ndarray:
        theta = math.radians(self.angle_deg)
        ux, uy = math.cos(theta), math.sin(theta)
        vx, vy = -uy, ux
        hl, hw = self.length / 2.0, self.width / 2.0
        c = np.array([self.cx, self.cy])
        return np.array(
            [
                c - hl * np.array([ux, uy]) - hw * np.array([vx, vy]),
                c + hl * np.array([ux, uy]) - hw * np.array([vx, vy]),
                c + hl * np.array([ux, uy]) + hw * np.array([vx, vy]),
                c - hl * np.array([ux, uy]) + hw * np.array([vx, vy]),
            ]
        )


@dataclass(frozen=True)
class BackgroundSpec:
    """Sea background: mean level, Gaussian noise, and sinusoidal clutter."""

    mean: float = 100.0
    noise_sd: float = 1.5
    wave_amplitude: float = 0.0
    wave_wavelength: float = 48.0

    def __post_init__(self):
        if self.mean <= 0:
            raise InputError(f"background mean must be positive, got {self.mean}")
        if self.noise_sd < 0 or self.wave_amplitude < 0:
            raise InputError("noise_sd and wave_amplitude must be non-negative")


@dataclass(frozen=True)
class SceneSpec:
    width: int = 256
    height: int = 256
    seed: int = 0
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    ships: tuple = ()
    spectral_noise_sd: float = 0.0

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise InputError("scene must be at least 2x2")
        object.__setattr__(self, "ships", tuple(self.ships))

    def to_json_obj(self) -> dict:
        doc = {
            "width": self.width,
            "height": self.height,
            "seed": self.seed,
            "background": {
                "mean": self.background.mean,
                "noise_sd": self.background.noise_sd,
                "wave_amplitude": self.background.wave_amplitude,
                "wave_wavelength": self.background.wave_wavelength,
            },
            "spectral_noise_sd": self.spectral_noise_sd,
            "ships": [],
        }
        for s in self.ships:
            entry = {
                "cx": s.cx,
                "cy": s.cy,
                "length": s.length,
                "width": s.width,
                "angle_deg": s.angle_deg,
                "target_mcr": s.target_mcr,
                "nir_mcr_boost": s.nir_mcr_boost,
                "intra_ship_sd": s.intra_ship_sd,
                "deck_amp": s.deck_amp,
            }
            if s.wake is not None:
                entry["wake"] = {"length": s.wake.length, "intensity": s.wake.intensity}
            doc["ships"].append(entry)
        return doc

    @classmethod
    def from_json_obj(cls, doc: dict) -> "SceneSpec":
        bg = doc.get("background", {})
        ships = []
        for entry in doc.get("ships", []):
            wake = entry.get("wake")
            ships.append(
                ShipSpec(
                    cx=entry["cx"],
                    cy=entry["cy"],
                    length=entry["length"],
                    width=entry["width"],
                    angle_deg=entry.get("angle_deg", 0.0),
                    target_mcr=entry.get("target_mcr", 2.0),
                    nir_mcr_boost=entry.get("nir_mcr_boost", 1.0),
                    intra_ship_sd=entry.get("intra_ship_sd", 0.0),
                    deck_amp=entry.get("deck_amp", 0.0),
                    wake=WakeSpec(wake["length"], wake["intensity"]) if wake else None,
                )
            )
        return cls(
            width=doc.get("width", 256),
            height=doc.get("height", 256),
            seed=doc.get("seed", 0),
            background=BackgroundSpec(
                mean=bg.get("mean", 100.0),
                noise_sd=bg.get("noise_sd", 1.5),
                wave_amplitude=bg.get("wave_amplitude", 0.0),
                wave_wavelength=bg.get("wave_wavelength", 48.0),
            ),
            ships=tuple(ships),
            spectral_noise_sd=doc.get("spectral_noise_sd", 0.0),
        )

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        return cls.from_json_obj(json.loads(Path(path).read_text()))


@dataclass(eq=False)
class Scene:
    """Generated scene: pan+nir image, ground truth, and per-ship masks."""

    image: MultibandImage
    gt: GroundTruth
    ship_masks: list[BinaryMask]
    background_masks: list[BinaryMask]


def _mask_from_pixels(pixels, width: int, height: int) -> np.ndarray:
    bits = np.zeros((height, width), dtype=bool)
    for x, y in pixels:
        bits[y, x] = True
    return bits


def background_rings(
    ship_bits: list[np.ndarray], exclude: np.ndarray | None = None
) -> list[np.ndarray]:
    """Per-ship background annulus: the 5x-dilated ship minus every ship,
    every other ship's dilation, and any extra excluded pixels."""
    if not ship_bits:
        return []
    all_ships = np.zeros_like(ship_bits[0])
    for bits in ship_bits:
        all_ships |= bits
    dilated = [kernels.dilate3(bits, BACKGROUND_RING_DILATIONS) for bits in ship_bits]
    rings = []
    for idx in range(len(ship_bits)):
        ring = dilated[idx] & ~all_ships
        if exclude is not None:
            ring &= ~exclude
        for jdx, other in enumerate(dilated):
            if jdx != idx:
                ring &= ~other
        rings.append(ring)
    return rings


def generate(spec: SceneSpec) -> Scene:
    """Render a scene from its spec; byte-identical for identical specs."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    w, h = spec.width, spec.height
    bg = spec.background

    xs = np.arange(w)[None, :]
    ys = np.arange(h)[:, None]
    base = np.full((h, w), bg.mean)
    if bg.wave_amplitude > 0:
        phase = math.radians(WAVE_DIRECTION_DEG)
        axis = xs * math.cos(phase) + ys * math.sin(phase)
        base = base + bg.wave_amplitude * np.sin(2 * math.pi * axis / bg.wave_wavelength)

    pan = base + rng.normal(0.0, bg.noise_sd, (h, w)) if bg.noise_sd > 0 else base.copy()
    nir = base + rng.normal(0.0, bg.noise_sd, (h, w)) if bg.noise_sd > 0 else base.copy()
    if spec.spectral_noise_sd > 0:
        nir = nir + rng.normal(0.0, spec.spectral_noise_sd, (h, w))

    painted = np.zeros((h, w), dtype=bool)
    annotations, ship_bits, wake_bits = [], [], np.zeros((h, w), dtype=bool)
    for idx, ship in enumerate(spec.ships):
        poly = ship.polygon()
        if (
            poly[:, 0].min() < 0
            or poly[:, 0].max() > w - 1
            or poly[:, 1].min() < 0
            or poly[:, 1].max() > h - 1
        ):
            raise InputError(f"ship {idx} extends outside the {w}x{h} frame")
        pixels = rasterize_polygon(poly)
        if not pixels:
            raise InputError(f"ship {idx} covers no pixel centers")
        bits = _mask_from_pixels(pixels, w, h)
        if np.any(bits & painted):
            raise InputError(f"ship {idx} overlaps an earlier ship")
        painted |= bits
        n = len(pixels)
        if ship.intra_ship_sd > 0:
            # clip at 2.5 sigma so heavy deck texture cannot dip into the
            # water gray range (mean is unaffected, the clip is symmetric)
            clip = 2.5 * ship.intra_ship_sd
            pan_noise = np.clip(rng.normal(0.0, ship.intra_ship_sd, n), -clip, clip)
            nir_noise = np.clip(rng.normal(0.0, ship.intra_ship_sd, n), -clip, clip)
        else:
            pan_noise = nir_noise = np.zeros(n)
        order = sorted(pixels, key=lambda p: (p[1], p[0]))
        stripes = np.array([ship.deck_amp if x % 2 == 0 else -ship.deck_amp for x, _ in order])
        stripes -= stripes.mean()  # parity imbalance must not shift the ship mean
        for k, (x, y) in enumerate(order):
            pan[y, x] = ship.target_mcr * bg.mean + stripes[k] + pan_noise[k]
            nir[y, x] = (
                ship.target_mcr * ship.nir_mcr_boost * bg.mean
                + stripes[k] * ship.nir_mcr_boost
                + nir_noise[k]
            )
        ship_bits.append(bits)
        annotations.append(GtAnnotation(id=f"ship-{idx}", polygon=poly))

        if ship.wake is not None and ship.wake.length > 0:
            theta = math.radians(ship.angle_deg)
            ux, uy = math.cos(theta), math.sin(theta)
            stern_x = ship.cx - ship.length / 2.0 * ux
            stern_y = ship.cy - ship.length / 2.0 * uy
            for d in range(1, ship.wake.length + 1):
                x = int(round(stern_x - d * ux))
                y = int(round(stern_y - d * uy))
                if not (0 <= x < w and 0 <= y < h) or painted[y, x]:
                    continue
                fade = ship.wake.intensity * (1.0 - d / (ship.wake.length + 1.0))
                pan[y, x] += fade
                nir[y, x] += fade
                wake_bits[y, x] = True

    background_masks = [
        BinaryMask(ring) for ring in background_rings(ship_bits, exclude=wake_bits)
    ]

    image = MultibandImage([Band(pan), Band(nir)], ["pan", "nir"])
    return Scene(
        image=image,
        gt=GroundTruth(annotations),
        ship_masks=[BinaryMask(b) for b in ship_bits],
        background_masks=background_masks,
    )


def write_scene(scene: Scene, out_dir) -> None:
    """Write pan.pgm, nir.pgm, manifest.json, and gt.json into a directory.

    Band values are rounded half-up and stored as 16-bit PGM.
    """
    from shipprop.raster import write_pgm

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for role in scene.image.band_roles:
        values = np.clip(np.floor(scene.image.band(role).values + 0.5), 0, 65535)
        write_pgm(Band(values, levels_hint=65536), out_dir / f"{role}.pgm", maxval=65535)
    manifest = {
        "bands": [{"role": role, "path": f"{role}.pgm"} for role in scene.image.band_roles]
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    (out_dir / "gt.json").write_text(
        json.dumps(scene.gt.to_json_obj(), indent=2, sort_keys=True) + "\n"
    )


def sample_scene_spec(
    seed: int,
    n_ships: tuple[int, int] = (1, 3),
    mcr_range: tuple[float, float] = (1.75, 3.25),
    nir_mcr_boost: float = 1.0,
    noise_sd: float = 1.0,
    wave_amplitude: float = 1.0,
    wave_wavelength: float = 48.0,
    spectral_noise_sd: float = 0.0,
    deck_ratio: float = 0.25,
    texture_ratio: float = 0.10,
    wakes: bool = False,
    width: int = 256,
    height: int = 256,
) -> SceneSpec:
    """Draw a random but reproducible scene spec: ship placement and contrast.

    Placement rejection-samples non-overlapping rotated rectangles with a
    margin, using an independent PCG64 stream so the scene's own noise seed
    stays untouched. Ships in one scene share a base contrast drawn from
    mcr_range (scenes group by contrast regime); deck_ratio and texture_ratio
    scale the stripe and Gaussian texture terms with the ship's contrast over
    the water. Widths stay above ~6 px: anything thinner cannot survive the
    detector's two-iteration morphological opening.
    """
    rng = np.random.Generator(np.random.PCG64(seed ^ 0x5CE9E5EED))
    count = int(rng.integers(n_ships[0], n_ships[1] + 1))
    base_mcr = float(rng.uniform(*mcr_range))
    bg_mean = 100.0
    ships: list[ShipSpec] = []
    taken: list[tuple[float, float, float]] = []  # (cx, cy, radius)
    attempts = 0
    while len(ships) < count and attempts < 200:
        attempts += 1
        length = float(rng.uniform(11.0, 18.0))
        width_px = float(rng.uniform(6.0, min(9.0, length / 1.6)))
        radius = math.hypot(length, width_px) / 2.0
        margin = radius + 8.0
        cx = float(rng.uniform(margin, width - 1 - margin))
        cy = float(rng.uniform(margin, height - 1 - margin))
        if any(math.hypot(cx - ox, cy - oy) < radius + orad + 12.0 for ox, oy, orad in taken):
            continue
        mcr = float(np.clip(base_mcr * rng.uniform(0.97, 1.03), *mcr_range))
        contrast = abs(mcr - 1.0) * bg_mean
        ships.append(
            ShipSpec(
                cx=cx,
                cy=cy,
                length=length,
                width=width_px,
                angle_deg=float(rng.uniform(0.0, 180.0)),
                target_mcr=mcr,
                nir_mcr_boost=nir_mcr_boost,
                intra_ship_sd=texture_ratio * contrast,
                deck_amp=deck_ratio * contrast,
                wake=WakeSpec(length=int(length), intensity=0.4 * contrast) if wakes else None,
            )
        )
        taken.append((cx, cy, radius))
    return SceneSpec(
        width=width,
        height=height,
        seed=seed,
        background=BackgroundSpec(
            mean=bg_mean,
            noise_sd=noise_sd,
            wave_amplitude=wave_amplitude,
            wave_wavelength=wave_wavelength,
        ),
        ships=tuple(ships),
        spectral_noise_sd=spectral_noise_sd,
    )

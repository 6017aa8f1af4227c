"""Desk-scale synthetic video generator with exact ground truth.

Class regions are a Voronoi partition of the coarse grid that translates by a
fixed integer offset per frame (with wraparound). Per-cell features are the
class prototype plus iid Gaussian noise, drawn independently per block from
the same prototypes, so block aggregation averages the noise down. Latents
and images render the regions with the default palette.

All randomness is derived from (seed, stream, frame) seed sequences: the
first frames of a longer video are bit-identical to a shorter one with the
same seed, which is what the autoregressive causality checks rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .arrayio import load_manifest, write_array, write_manifest, VideoManifest
from .errors import IoError
from .modulate import upsample_fullres
from .palette import DEFAULT_PALETTE


@dataclass(frozen=True)
class SynthSpec:
    frames: int = 14
    grid: tuple[int, int] = (32, 32)
    classes: int = 4
    prototype_separation: float = 10.0
    noise_sigma: float = 1.0
    motion: tuple[int, int] = (0, 0)
    seed: int = 0
    scale: int = 8
    channels: int = 16
    blocks: tuple[int, ...] = (6, 7, 8)

    @staticmethod
    def from_json(path: str | Path) -> "SynthSpec":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = dict(doc)
        for key in ("grid", "motion", "blocks"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return SynthSpec(**kwargs)

    def validate(self) -> None:
        if self.frames < 1 or self.classes < 1:
            raise ValueError("frames and classes must be positive")
        if self.classes > self.channels:
            raise ValueError("classes must not exceed channels (one prototype axis each)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        min_dist = self.prototype_separation * math.sqrt(2.0)
        if self.noise_sigma > 0 and min_dist <= 6.0 * self.noise_sigma:
            raise ValueError(
                f"prototype distance {min_dist:.3g} must exceed 6 * noise_sigma "
                f"{6 * self.noise_sigma:.3g} for the solvable regime"
            )


def _voronoi_regions(h: int, w: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Partition the grid into k regions around random sites; ties to lowest class."""
    sites = np.stack(
        [rng.integers(0, h, size=k), rng.integers(0, w, size=k)], axis=1
    )  # (k, 2)
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    d2 = (ii[None] - sites[:, 0, None, None]) ** 2 + (jj[None] - sites[:, 1, None, None]) ** 2
    return np.argmin(d2, axis=0).astype(np.int32)


def gt_grid(spec: SynthSpec, frame_index: int) -> np.ndarray:
    """Coarse ground-truth grid of one frame: frame 0's regions, translated."""
    h, w = spec.grid
    rng = np.random.default_rng([spec.seed, 0])
    base = _voronoi_regions(h, w, spec.classes, rng)
    dy, dx = spec.motion
    return np.roll(base, (frame_index * dy, frame_index * dx), axis=(0, 1))


def synth_generate(spec: SynthSpec, out_dir: str | Path) -> VideoManifest:
    """Materialize a synthetic video under out_dir and return its manifest.

    Deterministic: the same spec produces bit-identical files.
    """
    spec.validate()
    out = Path(out_dir)
    try:
        for sub in ("frames", "features", "latents", "gt"):
            (out / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directories under {out}: {exc}") from exc

    h, w = spec.grid
    height, width = h * spec.scale, w * spec.scale

    prototypes = np.zeros((spec.classes, spec.channels), dtype=np.float64)
    for k in range(spec.classes):
        prototypes[k, k] = spec.prototype_separation

    frames = []
    try:
        for i in range(spec.frames):
            gt = gt_grid(spec, i)
            record = {
                "image": f"frames/frame_{i:06d}.png",
                "features": {},
                "latent": f"latents/frame_{i:06d}.npy",
                "gt": f"gt/frame_{i:06d}.npy",
            }

            for b in spec.blocks:
                noise_rng = np.random.default_rng([spec.seed, 1, i, b])
                feat = prototypes[gt] + spec.noise_sigma * noise_rng.standard_normal(
                    (h, w, spec.channels)
                )
                rel = f"features/frame_{i:06d}_block{b:02d}.npy"
                write_array(out / rel, feat.astype(np.float32))
                record["features"][str(b)] = rel

            latent = DEFAULT_PALETTE[gt].astype(np.float32) / 255.0
            write_array(out / record["latent"], latent)

            rgb = upsample_fullres(DEFAULT_PALETTE[gt], (height, width))
            Image.fromarray(rgb, mode="RGB").save(out / record["image"])

            write_array(out / record["gt"], upsample_fullres(gt, (height, width)).astype(np.int32))
            frames.append(record)

        doc = {
            "video_id": f"synth_{spec.seed}",
            "frame_count": spec.frames,
            "image_size": [height, width],
            "coarse_size": [h, w],
            "scale": spec.scale,
            "block_ids": list(spec.blocks),
            "num_gt_classes": spec.classes,
            "frames": frames,
        }
        write_manifest(out / "manifest.json", doc)
    except OSError as exc:
        raise IoError(f"failed writing synthetic video under {out}: {exc}") from exc

    return load_manifest(out / "manifest.json")

"""Deterministic label colors, indexed PNG output and overlay rendering.

The palette follows the bit-interleaving rule used by common segmentation
datasets: bit j of channel r/g/b takes bit 3j / 3j+1 / 3j+2 of the label
index, placed from the most significant position down. Label 0 is black,
label 1 (128, 0, 0), label 3 (128, 128, 0), the ignore index 255
(224, 224, 192).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ShapeMismatch


def _bit(value: int, idx: int) -> int:
    return (value >> idx) & 1


def make_palette(n: int = 256) -> np.ndarray:
    """(n, 3) uint8 palette, deterministic from the label index alone."""
    pal = np.zeros((n, 3), dtype=np.uint8)
    for i in range(n):
        c = i
        r = g = b = 0
        for j in range(8):
            r |= _bit(c, 0) << (7 - j)
            g |= _bit(c, 1) << (7 - j)
            b |= _bit(c, 2) << (7 - j)
            c >>= 3
        pal[i] = (r, g, b)
    return pal


DEFAULT_PALETTE = make_palette()


def render_overlay(
    image: np.ndarray, labels: np.ndarray, alpha: float = 0.5, palette: np.ndarray | None = None
) -> np.ndarray:
    """Alpha-blend label colors over an RGB image; returns uint8."""
    if palette is None:
        palette = DEFAULT_PALETTE
    image = np.asarray(image)
    labels = np.asarray(labels)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[:2] != labels.shape:
        raise ShapeMismatch(f"image {image.shape} vs labels {labels.shape}")
    if image.dtype == np.uint8:
        img = image.astype(np.float64)
    else:
        img = np.asarray(image, dtype=np.float64) * 255.0
    colors = palette[labels].astype(np.float64)
    blended = (1.0 - alpha) * img + alpha * colors
    return np.clip(np.rint(blended), 0, 255).astype(np.uint8)


def save_indexed_png(labels: np.ndarray, path: str | Path, palette: np.ndarray | None = None) -> None:
    """Write a label map as a paletted PNG whose pixel values are the labels."""
    from PIL import Image

    if palette is None:
        palette = DEFAULT_PALETTE
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 255:
        raise ShapeMismatch(f"labels span [{labels.min()}, {labels.max()}], need [0, 255]")
    im = Image.fromarray(labels.astype(np.uint8), mode="P")
    im.putpalette(palette.astype(np.uint8).reshape(-1).tobytes())
    im.save(Path(path))

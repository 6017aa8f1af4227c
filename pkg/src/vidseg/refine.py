"""Correspondence-based refinement of coarse label grids.

Labels propagate between consecutive frames through the best cosine-similarity
feature match, gated by a spatial radius: a match farther than the threshold
(squared grid distance) is considered implausible and the cell keeps its own
label. A per-pixel majority vote over the batch then removes transient
flicker.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EmptyList, ShapeMismatch, ZeroVector


def correspond(
    feat_a: np.ndarray,
    feat_b: np.ndarray,
    mask_a: np.ndarray,
    mask_b: np.ndarray,
    threshold: float,
) -> np.ndarray:
    """Propagate labels from frame b back onto frame a's grid.

    For each cell p of frame a, find the cell q of frame b with maximal
    cosine similarity (ties: smallest q in row-major order). If the squared
    grid distance between p and q is within the threshold, the output takes
    mask_b[q]; otherwise it keeps mask_a[p].
    """
    feat_a = np.asarray(feat_a)
    feat_b = np.asarray(feat_b)
    mask_a = np.asarray(mask_a)
    mask_b = np.asarray(mask_b)
    if feat_a.shape != feat_b.shape or feat_a.ndim != 3:
        raise ShapeMismatch(f"feature grids differ: {feat_a.shape} vs {feat_b.shape}")
    if mask_a.shape != mask_b.shape or mask_a.shape != feat_a.shape[:2]:
        raise ShapeMismatch(
            f"masks {mask_a.shape}/{mask_b.shape} must match grid {feat_a.shape[:2]}"
        )
    if threshold < 0:
        raise ValueError("threshold must be >= 0")

    h, w, _ = feat_a.shape
    a = feat_a.reshape(h * w, -1).astype(np.float64)
    b = feat_b.reshape(h * w, -1).astype(np.float64)
    na = np.sqrt(np.sum(a * a, axis=1))
    nb = np.sqrt(np.sum(b * b, axis=1))
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ZeroVector("cosine similarity undefined for a zero-norm feature vector")

    sim = (a / na[:, None]) @ (b / nb[:, None]).T  # (hw, hw)
    best = np.argmax(sim, axis=1)  # first max = smallest row-major q

    p_i, p_j = np.divmod(np.arange(h * w), w)
    q_i, q_j = np.divmod(best, w)
    dist2 = (p_i - q_i) ** 2 + (p_j - q_j) ** 2
    plausible = dist2 <= threshold

    out = np.where(plausible, mask_b.reshape(-1)[best], mask_a.reshape(-1))
    return out.reshape(h, w).astype(np.int32)


def temporal_vote(masks: list[np.ndarray]) -> np.ndarray:
    """Per-pixel majority label across frames; count ties go to the lowest label."""
    if len(masks) == 0:
        raise EmptyList("temporal_vote requires at least one mask")
    shapes = {np.asarray(m).shape for m in masks}
    if len(shapes) != 1:
        raise ShapeMismatch(f"masks disagree on shape: {sorted(shapes)}")
    stack = np.stack([np.asarray(m) for m in masks])  # (B, h, w)
    n_labels = int(stack.max()) + 1
    counts = (stack[None, :, :, :] == np.arange(n_labels)[:, None, None, None]).sum(axis=1)
    return counts.argmax(axis=0).astype(np.int32)


def refine_batch(
    features: list[np.ndarray],
    masks: list[np.ndarray],
    threshold: float,
    mode: str = "batch_voted",
) -> list[np.ndarray]:
    """Refine a batch of coarse masks.

    The correspondence step maps each frame j onto frame j+1 (the last frame
    has no successor and passes through unchanged). batch_voted returns the
    single voted map for every frame; per_frame keeps each propagated mask and
    overrides a cell with the voted label only where that label won at least
    ceil(B/2) of the frames.
    """
    if len(features) != len(masks):
        raise ShapeMismatch(f"{len(features)} feature grids vs {len(masks)} masks")
    if len(masks) == 0:
        raise EmptyList("refine_batch requires at least one frame")
    if mode not in ("batch_voted", "per_frame"):
        raise ValueError(f"unknown refinement mode {mode!r}")
    n = len(masks)
    if n == 1:
        return [np.asarray(masks[0]).astype(np.int32).copy()]

    propagated = [
        correspond(features[j], features[j + 1], masks[j], masks[j + 1], threshold)
        for j in range(n - 1)
    ]
    propagated.append(np.asarray(masks[-1]).astype(np.int32).copy())

    voted = temporal_vote(propagated)
    if mode == "batch_voted":
        return [voted.copy() for _ in range(n)]

    stack = np.stack(propagated)
    winner_count = (stack == voted[None, :, :]).sum(axis=0)
    quorum = math.ceil(n / 2)
    return [
        np.where(winner_count >= quorum, voted, m).astype(np.int32) for m in propagated
    ]

"""Evaluation protocol: ground-truth label assignment, mIoU, and mVC.

Clusters are class-agnostic, so before scoring, each cluster is assigned the
ground-truth class it overlaps most on the first frame; the cluster masks
themselves are kept untouched. mIoU accumulates TP/FP/FN per class over all
frames. mVC_n slides a window of n frames and measures, among pixels whose
ground-truth class persists through the whole window, the fraction that the
predictions also keep constant.
"""

from __future__ import annotations

import numpy as np

from .errors import NoValidPixels, ShapeMismatch, WindowTooLong

IGNORE = 255


def assign_gt_labels(
    pred_first: np.ndarray, gt_first: np.ndarray, num_clusters: int | None = None
) -> dict[int, int]:
    """Map each cluster index to the GT class with maximal pixel overlap.

    Ignore pixels are excluded; a cluster with no valid overlap maps to the
    ignore value. Overlap ties go to the smaller class id.
    """
    pred_first = np.asarray(pred_first)
    gt_first = np.asarray(gt_first)
    if pred_first.shape != gt_first.shape:
        raise ShapeMismatch(f"pred {pred_first.shape} vs gt {gt_first.shape}")
    if num_clusters is None:
        num_clusters = int(pred_first.max()) + 1
    valid = gt_first != IGNORE
    assignment: dict[int, int] = {}
    for l in range(num_clusters):
        overlap = valid & (pred_first == l)
        if not overlap.any():
            assignment[l] = IGNORE
            continue
        counts = np.bincount(gt_first[overlap])
        assignment[l] = int(np.argmax(counts))
    return assignment


def apply_assignment(pred: np.ndarray, assignment: dict[int, int]) -> np.ndarray:
    """Relabel a cluster map into class space through the assignment table."""
    lut = np.full(max(assignment) + 1, IGNORE, dtype=np.int64)
    for cluster, cls in assignment.items():
        lut[cluster] = cls
    pred = np.asarray(pred)
    if pred.max() >= lut.shape[0] or pred.min() < 0:
        raise ShapeMismatch(
            f"prediction labels span [{pred.min()}, {pred.max()}], assignment covers "
            f"[0, {lut.shape[0]})"
        )
    return lut[pred].astype(np.int32)


def miou(
    preds: list[np.ndarray], gts: list[np.ndarray], num_classes: int
) -> tuple[float, dict[int, float]]:
    """Mean IoU over classes present in GT or predictions, plus per-class IoU.

    Pixels whose ground truth is the ignore value are excluded from every
    count. Predictions equal to the ignore value at valid pixels count as
    false negatives only.
    """
    if len(preds) != len(gts) or len(preds) == 0:
        raise ShapeMismatch(f"{len(preds)} predictions vs {len(gts)} ground-truth maps")
    tp = np.zeros(num_classes, dtype=np.int64)
    fp = np.zeros(num_classes, dtype=np.int64)
    fn = np.zeros(num_classes, dtype=np.int64)
    any_valid = False
    for pred, gt in zip(preds, gts):
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeMismatch(f"pred {pred.shape} vs gt {gt.shape}")
        valid = gt != IGNORE
        if not valid.any():
            continue
        any_valid = True
        p = pred[valid]
        g = gt[valid]
        for c in range(num_classes):
            tp[c] += np.count_nonzero((g == c) & (p == c))
            fp[c] += np.count_nonzero((g != c) & (p == c))
            fn[c] += np.count_nonzero((g == c) & (p != c))
    if not any_valid:
        raise NoValidPixels("every pixel is ignored")
    present = (tp + fp + fn) > 0
    per_class = {
        int(c): float(tp[c]) / float(tp[c] + fp[c] + fn[c]) for c in np.flatnonzero(present)
    }
    if not per_class:
        raise NoValidPixels("no class present in ground truth or predictions")
    return float(np.mean(list(per_class.values()))), per_class


def mvc(preds: list[np.ndarray], gts: list[np.ndarray], n: int) -> float:
    """Video consistency over sliding windows of n frames.

    Per window and class c: G_c holds pixels that are c in the ground truth of
    every frame, P_c those predicted c in every frame; the window scores
    sum_c |G_c & P_c| / sum_c |G_c|. Windows without any persistent GT pixel
    are skipped; the result is the mean over the remaining windows.
    """
    t = len(preds)
    if t != len(gts) or t == 0:
        raise ShapeMismatch(f"{len(preds)} predictions vs {len(gts)} ground-truth maps")
    if n > t:
        raise WindowTooLong(f"window n={n} exceeds video length {t}")
    if n < 1:
        raise ValueError("window length must be >= 1")
    pred_stack = np.stack([np.asarray(p) for p in preds])
    gt_stack = np.stack([np.asarray(g) for g in gts])
    if pred_stack.shape != gt_stack.shape:
        raise ShapeMismatch(f"pred {pred_stack.shape} vs gt {gt_stack.shape}")

    scores = []
    for start in range(t - n + 1):
        gw = gt_stack[start : start + n]
        pw = pred_stack[start : start + n]
        classes = np.unique(gw)
        classes = classes[classes != IGNORE]
        num = 0
        den = 0
        for c in classes:
            g_persist = (gw == c).all(axis=0)
            den += int(np.count_nonzero(g_persist))
            num += int(np.count_nonzero(g_persist & (pw == c).all(axis=0)))
        if den == 0:
            continue
        scores.append(num / den)
    if not scores:
        raise NoValidPixels("no window has a persistent ground-truth pixel")
    return float(np.mean(scores))

"""Scene context model: a nearest-neighbor classifier over aggregated features.

The model is fit on the first frame's (feature, label) pairs and predicts a
coarse label grid for later frames. After each batch it is updated either by
replacing the store with the batch's pairs (default) or by appending the
batch to a sliding window that always retains frame 1.

Neighbor search is exact brute force. Distances are computed with the direct
sum((q - s)^2) form so an independent exhaustive-scan oracle produces
bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ChannelMismatch,
    EmptyBatch,
    LabelOutOfRange,
    MissingBlock,
    ShapeMismatch,
)

# bounds the (chunk, store, C) float64 distance workspace
_QUERY_CHUNK = 32


def aggregate_features(grids: dict[int, np.ndarray], blocks: list[int]) -> np.ndarray:
    """Average per-block feature grids over the selected blocks.

    All selected blocks must share (h, w, C). The mean is taken in float64 so
    aggregating identical grids is an exact identity, then cast to float32.
    """
    missing = [b for b in blocks if b not in grids]
    if missing:
        raise MissingBlock(f"blocks {missing} not present (have {sorted(grids)})")
    if not blocks:
        raise MissingBlock("no blocks selected")
    shapes = {grids[b].shape for b in blocks}
    if len(shapes) != 1:
        raise ShapeMismatch(f"selected blocks disagree on shape: {sorted(shapes)}")
    stack = np.stack([np.asarray(grids[b], dtype=np.float64) for b in blocks])
    return (stack.sum(axis=0) / len(blocks)).astype(np.float32)


@dataclass(frozen=True)
class ContextModel:
    """Immutable labeled feature store with k-NN prediction."""

    initial_vectors: np.ndarray  # (n0, C) frame-1 pairs, kept for append_window
    initial_labels: np.ndarray  # (n0,)
    window: tuple[tuple[np.ndarray, np.ndarray], ...]  # batches of (vectors, labels)
    k_nn: int
    L: int
    update_mode: str = "replace"  # "replace" | "append_window"
    window_size: int = 4

    @property
    def store(self) -> tuple[np.ndarray, np.ndarray]:
        """Current (vectors, labels) the classifier searches over."""
        if self.update_mode == "replace":
            if self.window:
                return self.window[-1]
            return self.initial_vectors, self.initial_labels
        vecs = [self.initial_vectors] + [v for v, _ in self.window]
        labs = [self.initial_labels] + [l for _, l in self.window]
        return np.concatenate(vecs), np.concatenate(labs)

    @property
    def store_size(self) -> int:
        return self.store[0].shape[0]


def fit_initial(features: np.ndarray, mask: np.ndarray, k_nn: int, L: int,
                update_mode: str = "replace", window_size: int = 4) -> ContextModel:
    """Build the model from frame 1: one (vector, label) pair per grid cell."""
    features = np.asarray(features)
    mask = np.asarray(mask)
    if features.ndim != 3 or mask.ndim != 2 or features.shape[:2] != mask.shape:
        raise ShapeMismatch(f"features {features.shape} vs mask {mask.shape}")
    if mask.min() < 0 or mask.max() >= L:
        raise LabelOutOfRange(f"mask labels span [{mask.min()}, {mask.max()}], L={L}")
    if k_nn < 1:
        raise ValueError("k_nn must be >= 1")
    if update_mode not in ("replace", "append_window"):
        raise ValueError(f"unknown update_mode {update_mode!r}")
    vectors = features.reshape(-1, features.shape[2]).astype(np.float64)
    labels = mask.reshape(-1).astype(np.int64)
    return ContextModel(
        initial_vectors=vectors,
        initial_labels=labels,
        window=(),
        k_nn=k_nn,
        L=L,
        update_mode=update_mode,
        window_size=window_size,
    )


def _knn_labels(model: ContextModel, queries: np.ndarray) -> np.ndarray:
    """Majority label per query among the k nearest store vectors.

    Count ties resolve to the single nearest neighbor's label.
    """
    store_vecs, store_labels = model.store
    n = store_vecs.shape[0]
    k = min(model.k_nn, n)
    out = np.empty(queries.shape[0], dtype=np.int32)
    for start in range(0, queries.shape[0], _QUERY_CHUNK):
        q = queries[start : start + _QUERY_CHUNK]
        diff = q[:, None, :] - store_vecs[None, :, :]
        np.square(diff, out=diff)
        d2 = np.sum(diff, axis=-1)
        if k < n:
            cand = np.argpartition(d2, k - 1, axis=1)[:, :k]
        else:
            cand = np.broadcast_to(np.arange(n), (q.shape[0], n))
        cand_d = np.take_along_axis(d2, cand, axis=1)
        # rank candidates by (distance, store index): deterministic under ties
        order = np.lexsort((cand, cand_d), axis=1)
        ranked = np.take_along_axis(cand, order, axis=1)
        neigh_labels = store_labels[ranked]  # (chunk, k) nearest-first

        counts = np.zeros((q.shape[0], model.L), dtype=np.int64)
        rows = np.repeat(np.arange(q.shape[0]), k)
        np.add.at(counts, (rows, neigh_labels.reshape(-1)), 1)
        top = counts.max(axis=1)
        tied = (counts == top[:, None]).sum(axis=1) > 1
        majority = counts.argmax(axis=1)
        nearest = neigh_labels[:, 0]
        out[start : start + _QUERY_CHUNK] = np.where(tied, nearest, majority)
    return out


def predict(model: ContextModel, features: np.ndarray) -> np.ndarray:
    """Predict a coarse label grid for one frame's aggregated features."""
    features = np.asarray(features)
    store_vecs, _ = model.store
    if features.ndim != 3 or features.shape[2] != store_vecs.shape[1]:
        raise ChannelMismatch(
            f"features {features.shape} incompatible with store dim {store_vecs.shape[1]}"
        )
    queries = features.reshape(-1, features.shape[2]).astype(np.float64)
    return _knn_labels(model, queries).reshape(features.shape[:2])


def update(model: ContextModel, masks: list[np.ndarray], features: list[np.ndarray]) -> ContextModel:
    """Fold one batch of (refined mask, features) pairs into a new model."""
    if len(masks) == 0 or len(features) == 0:
        raise EmptyBatch("update requires at least one frame")
    if len(masks) != len(features):
        raise ShapeMismatch(f"{len(masks)} masks vs {len(features)} feature grids")
    vecs, labs = [], []
    for mask, feat in zip(masks, features):
        mask = np.asarray(mask)
        feat = np.asarray(feat)
        if feat.ndim != 3 or feat.shape[:2] != mask.shape:
            raise ShapeMismatch(f"features {feat.shape} vs mask {mask.shape}")
        if feat.shape[2] != model.initial_vectors.shape[1]:
            raise ChannelMismatch(
                f"features have {feat.shape[2]} channels, store has "
                f"{model.initial_vectors.shape[1]}"
            )
        if mask.min() < 0 or mask.max() >= model.L:
            raise LabelOutOfRange(f"labels span [{mask.min()}, {mask.max()}], L={model.L}")
        vecs.append(feat.reshape(-1, feat.shape[2]).astype(np.float64))
        labs.append(mask.reshape(-1).astype(np.int64))
    batch = (np.concatenate(vecs), np.concatenate(labs))
    if model.update_mode == "replace":
        window = (batch,)
    else:
        window = (model.window + (batch,))[-model.window_size :]
    return replace(model, window=window)

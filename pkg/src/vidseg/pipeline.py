"""Three-stage video segmentation over a manifest of pre-extracted features.

Stage 1 clusters the first frame's aggregated features and fits the scene
context model. Stage 2 walks the video in batches: the context model predicts
a coarse mask per frame, correspondence-based refinement cleans the batch up,
and the model is updated with the refined batch before the next one (strictly
autoregressive: a batch never sees anything later than itself). Stage 3 lifts
each refined mask to image resolution through masked modulation and the
difference-map argmax.

If ground truth is present, clusters are assigned classes from the first
frame and the run is scored with mIoU and mVC.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import context, metrics
from .arrayio import VideoManifest, load_image, load_label_map, read_array
from .clustering import kmeans_fit
from .errors import (
    InvalidSchedule,
    IoError,
    MissingBlock,
    SOutOfRange,
    WindowTooLong,
)
from .external import ExternalBackboneClient
from .modulate import (
    ToyBackbone,
    difference_map,
    filter_difference,
    label_from_differences,
    modulated_rollout,
    reference_trajectory,
    upsample_fullres,
)
from .palette import render_overlay, save_indexed_png
from .refine import refine_batch

CBR_MODES = ("batch_voted", "per_frame", "off")
UPDATE_MODES = ("replace", "append_window")

# JSON field name -> attribute name, where they differ
_JSON_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_JSON = {v: k for k, v in _JSON_TO_ATTR.items()}


@dataclass(frozen=True)
class PipelineConfig:
    batch_size: int = 14
    num_clusters: int = 20
    blocks_aggregate: tuple[int, ...] = (6, 7, 8)
    block_correspond: int = 7
    block_modulate: int = 7
    lam: float = 50.0
    t_m: int = 20
    t_f: int = 25
    t_inv: int = 25
    threshold: float = 1.0
    filter_strength: float = 0.7
    k_nn: int = 5
    cbr_mode: str = "batch_voted"
    update_mode: str = "replace"
    update_window: int = 4
    seed: int = 0
    backbone: str = "toy"
    workers: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be >= 1")
        if not 0.0 <= self.filter_strength <= 1.0:
            raise SOutOfRange(f"filter_strength {self.filter_strength} outside [0, 1]")
        if self.t_m > self.t_f:
            raise InvalidSchedule(f"t_m={self.t_m} exceeds t_f={self.t_f}")
        if self.t_inv < self.t_m:
            raise InvalidSchedule(f"t_inv={self.t_inv} below t_m={self.t_m}")
        if self.cbr_mode not in CBR_MODES:
            raise ValueError(f"cbr_mode must be one of {CBR_MODES}")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @staticmethod
    def from_json(path: str | Path) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = {}
        for key, value in doc.items():
            attr = _JSON_TO_ATTR.get(key, key)
            if attr == "blocks_aggregate":
                value = tuple(value)
            kwargs[attr] = value
        return PipelineConfig(**kwargs)

    def to_json_dict(self) -> dict:
        doc = {}
        for attr, value in asdict(self).items():
            key = _ATTR_TO_JSON.get(attr, attr)
            doc[key] = list(value) if isinstance(value, tuple) else value
        return doc


@dataclass
class PipelineResult:
    label_maps: list[np.ndarray]  # full-resolution, cluster indices
    coarse_masks: list[np.ndarray]  # refined coarse masks
    assignment: dict[int, int] | None = None
    class_maps: list[np.ndarray] | None = None  # after GT label assignment
    report: dict | None = None

    @property
    def output_maps(self) -> list[np.ndarray]:
        return self.class_maps if self.class_maps is not None else self.label_maps


def _make_backbone(manifest: VideoManifest, config: PipelineConfig):
    """Instantiate the backbone named by the config ("toy" or "external:DIR")."""
    if config.backbone == "toy":
        targets = [read_array(fr.latent) for fr in manifest.frames]
        return ToyBackbone(targets=targets, scale=manifest.scale)
    if config.backbone.startswith("external:"):
        return ExternalBackboneClient(config.backbone.split(":", 1)[1])
    raise ValueError(f"unknown backbone {config.backbone!r}")


def _cluster_difference(
    backbone,
    frame_index: int,
    cluster: int,
    coarse_mask: np.ndarray,
    config: PipelineConfig,
    image_size: tuple[int, int],
    reference,
) -> np.ndarray:
    """Filtered difference map for one (frame, cluster) pair.

    Clusters absent from the mask get an all-zero map, exactly what a rollout
    with an empty mask would decode to.
    """
    mask = (coarse_mask == cluster).astype(np.uint8)
    if not mask.any():
        return np.zeros(image_size, dtype=np.float32)
    if isinstance(backbone, ExternalBackboneClient):
        plus, minus = backbone.difference_images(
            frame_index, cluster, mask, config.lam, config.t_m, config.t_f, config.block_modulate
        )
    else:
        plus, minus = modulated_rollout(
            backbone,
            frame_index,
            mask,
            config.lam,
            config.t_m,
            config.t_f,
            config.t_inv,
            block=config.block_modulate,
            reference=reference,
        )
    diff = difference_map(plus, minus)
    mask_full = upsample_fullres(mask, image_size)
    return filter_difference(diff, mask_full, config.filter_strength)


def _stage3_frame(
    backbone,
    frame_index: int,
    coarse_mask: np.ndarray,
    config: PipelineConfig,
    image_size: tuple[int, int],
) -> np.ndarray:
    """Full-resolution label map of one frame from its refined coarse mask."""
    reference = None
    if not isinstance(backbone, ExternalBackboneClient):
        # in-process backbones share one reference trajectory across clusters
        reference = reference_trajectory(backbone, frame_index, config.t_f, config.t_inv)

    def one(cluster: int) -> np.ndarray:
        return _cluster_difference(
            backbone, frame_index, cluster, coarse_mask, config, image_size, reference
        )

    clusters = range(config.num_clusters)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            maps = list(pool.map(one, clusters))
    else:
        maps = [one(c) for c in clusters]
    return label_from_differences(maps)


def run_video(
    manifest: VideoManifest,
    config: PipelineConfig,
    out_dir: str | Path | None = None,
    coarse_only: bool = False,
    backbone=None,
) -> PipelineResult:
    """Run the full pipeline over one video.

    Deterministic given the manifest and config. Outputs are only written
    once the whole run has succeeded, never partially.
    """
    needed = set(config.blocks_aggregate) | {config.block_correspond}
    missing = sorted(needed - set(manifest.block_ids))
    if missing:
        raise MissingBlock(f"config needs blocks {missing}, manifest has {list(manifest.block_ids)}")

    n = manifest.frame_count
    grids = [
        {b: read_array(fr.features[b]) for b in needed} for fr in manifest.frames
    ]
    aggregated = [
        context.aggregate_features(g, list(config.blocks_aggregate)) for g in grids
    ]
    correspond_feats = [g[config.block_correspond] for g in grids]

    # stage 1: initial coarse mask and context model from frame 0
    points = aggregated[0].reshape(-1, aggregated[0].shape[2])
    _, labels = kmeans_fit(points, config.num_clusters, seed=config.seed)
    first_mask = labels.reshape(aggregated[0].shape[:2])
    model = context.fit_initial(
        aggregated[0],
        first_mask,
        config.k_nn,
        config.num_clusters,
        update_mode=config.update_mode,
        window_size=config.update_window,
    )

    # stage 2: batched prediction, refinement, autoregressive update
    coarse_masks: list[np.ndarray] = []
    for start in range(0, n, config.batch_size):
        idx = list(range(start, min(start + config.batch_size, n)))
        predicted = [
            first_mask if i == 0 else context.predict(model, aggregated[i]) for i in idx
        ]
        if config.cbr_mode == "off":
            refined = [m.astype(np.int32) for m in predicted]
        else:
            refined = refine_batch(
                [correspond_feats[i] for i in idx],
                predicted,
                config.threshold,
                mode=config.cbr_mode,
            )
        model = context.update(model, refined, [aggregated[i] for i in idx])
        coarse_masks.extend(refined)

    # stage 3: masked modulation to full resolution
    image_size = manifest.image_size
    if coarse_only:
        label_maps = [upsample_fullres(m, image_size) for m in coarse_masks]
    else:
        if backbone is None:
            backbone = _make_backbone(manifest, config)
        label_maps = [
            _stage3_frame(backbone, i, coarse_masks[i], config, image_size) for i in range(n)
        ]

    result = PipelineResult(label_maps=label_maps, coarse_masks=coarse_masks)

    if manifest.has_gt:
        gts = [load_label_map(fr.gt) for fr in manifest.frames]
        result.assignment = assignment = metrics.assign_gt_labels(
            label_maps[0], gts[0], config.num_clusters
        )
        result.class_maps = [metrics.apply_assignment(m, assignment) for m in label_maps]
        if manifest.num_gt_classes is not None:
            num_classes = manifest.num_gt_classes
        else:
            num_classes = max(int(g[g != metrics.IGNORE].max()) for g in gts) + 1
        result.report = build_report(
            result.class_maps, gts, num_classes, video_id=manifest.video_id
        )

    if out_dir is not None:
        _write_outputs(manifest, result, Path(out_dir))
    return result


def build_report(
    preds: list[np.ndarray], gts: list[np.ndarray], num_classes: int, video_id: str = "video"
) -> dict:
    """Metric report document: miou, mvc8, mvc16, per_class_iou, per_video."""
    mean_iou, per_class = metrics.miou(preds, gts, num_classes)

    def windowed(window: int) -> float | None:
        try:
            return metrics.mvc(preds, gts, window)
        except WindowTooLong:
            return None

    mvc8 = windowed(8)
    mvc16 = windowed(16)
    entry = {"miou": mean_iou, "mvc8": mvc8, "mvc16": mvc16}
    return {
        **entry,
        "per_class_iou": {str(c): v for c, v in per_class.items()},
        "per_video": {video_id: entry},
    }


def _write_outputs(manifest: VideoManifest, result: PipelineResult, out: Path) -> None:
    from PIL import Image

    try:
        (out / "maps").mkdir(parents=True, exist_ok=True)
        (out / "overlays").mkdir(parents=True, exist_ok=True)
        for i, labels in enumerate(result.output_maps):
            save_indexed_png(labels, out / "maps" / f"frame_{i:06d}.png")
            image = load_image(manifest.frames[i].image)
            overlay = render_overlay(image, labels, alpha=0.5)
            Image.fromarray(overlay, mode="RGB").save(out / "overlays" / f"frame_{i:06d}.png")
        if result.report is not None:
            (out / "report.json").write_text(
                json.dumps(result.report, indent=2) + "\n", encoding="utf-8"
            )
    except OSError as exc:
        raise IoError(f"failed writing outputs under {out}: {exc}") from exc

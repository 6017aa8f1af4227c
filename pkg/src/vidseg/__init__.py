"""Zero-shot video semantic segmentation over pre-extracted diffusion features.

Three stages: a scene context model predicts per-frame coarse masks from
aggregated features, correspondence-based refinement regularizes them across
the batch, and masked modulation lifts them to image resolution.
"""

from . import errors
from .arrayio import (
    FrameRecord,
    VideoManifest,
    load_manifest,
    read_array,
    read_array_header,
    write_array,
    write_manifest,
)
from .clustering import ClusterModel, kmeans_assign, kmeans_fit
from .context import ContextModel, aggregate_features, fit_initial, predict, update
from .external import ExternalBackboneClient
from .metrics import apply_assignment, assign_gt_labels, miou, mvc
from .modulate import (
    LatentState,
    Modulation,
    ToyBackbone,
    blend_latents,
    difference_map,
    filter_difference,
    label_from_differences,
    modulated_rollout,
    reference_trajectory,
    upsample_fullres,
)
from .palette import DEFAULT_PALETTE, make_palette, render_overlay, save_indexed_png
from .pipeline import PipelineConfig, PipelineResult, build_report, run_video
from .refine import correspond, refine_batch, temporal_vote
from .synth import SynthSpec, synth_generate

__all__ = [
    "errors",
    "FrameRecord",
    "VideoManifest",
    "load_manifest",
    "read_array",
    "read_array_header",
    "write_array",
    "write_manifest",
    "ClusterModel",
    "kmeans_assign",
    "kmeans_fit",
    "ContextModel",
    "aggregate_features",
    "fit_initial",
    "predict",
    "update",
    "ExternalBackboneClient",
    "apply_assignment",
    "assign_gt_labels",
    "miou",
    "mvc",
    "LatentState",
    "Modulation",
    "ToyBackbone",
    "blend_latents",
    "difference_map",
    "filter_difference",
    "label_from_differences",
    "modulated_rollout",
    "reference_trajectory",
    "upsample_fullres",
    "DEFAULT_PALETTE",
    "make_palette",
    "render_overlay",
    "save_indexed_png",
    "PipelineConfig",
    "PipelineResult",
    "build_report",
    "run_video",
    "correspond",
    "refine_batch",
    "temporal_vote",
    "SynthSpec",
    "synth_generate",
]

__version__ = "0.1.0"

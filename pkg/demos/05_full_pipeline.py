"""End to end: synthesize a video, segment it, score it, write the outputs.

Equivalent to:

    vss synth --spec spec.json --out video/
    vss run --manifest video/manifest.json --config config.json --out run/
    vss eval --pred run/maps --gt video/gt --report report.json
"""

import tempfile
from pathlib import Path

from vidseg import PipelineConfig, run_video
from vidseg.synth import SynthSpec, synth_generate

workdir = Path(tempfile.mkdtemp(prefix="vidseg_demo_"))

spec = SynthSpec(
    frames=14,
    grid=(32, 32),
    classes=4,
    prototype_separation=10.0,
    noise_sigma=1.0,
    motion=(0, 0),
    seed=42,
)
manifest = synth_generate(spec, workdir / "video")
print(f"video: {manifest.frame_count} frames at {manifest.image_size}, "
      f"{manifest.num_gt_classes} classes, blocks {list(manifest.block_ids)}")

config = PipelineConfig()  # paper-default hyperparameters, toy backbone
result = run_video(manifest, config, out_dir=workdir / "run")

print(f"\nclusters -> classes: { {k: v for k, v in result.assignment.items() if v != 255} }")
print(f"mIoU:  {result.report['miou']:.4f}")
print(f"mVC8:  {result.report['mvc8']:.4f}")
print(f"mVC16: {result.report['mvc16']}")  # None: window longer than the video
print(f"per-class IoU: {result.report['per_class_iou']}")

print(f"\noutputs under {workdir / 'run'}:")
for path in sorted((workdir / "run").rglob("*")):
    if path.is_file():
        print("  ", path.relative_to(workdir))

"""Command-line entry points: vss run / synth / eval.

Exit code 0 on success; any engine failure prints the typed error name and
message on stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

from .arrayio import load_label_map, load_manifest
from .errors import MissingFile, VidsegError
from .pipeline import PipelineConfig, build_report, run_video
from .synth import SynthSpec, synth_generate


def _cmd_run(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if args.backbone:
        config = replace(config, backbone=args.backbone)
    result = run_video(manifest, config, out_dir=args.out, coarse_only=args.coarse_only)
    if result.report is not None:
        print(json.dumps(result.report["per_video"][manifest.video_id]))
    else:
        print(f"segmented {manifest.frame_count} frames (no ground truth, no metrics)")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec.from_json(args.spec) if args.spec else SynthSpec()
    manifest = synth_generate(spec, args.out)
    print(f"wrote {manifest.frame_count} frames under {args.out}")
    return 0


def _frame_maps(directory: Path) -> list:
    paths = sorted(
        p for p in directory.iterdir() if re.fullmatch(r"frame_\d+\.(png|npy)", p.name)
    )
    if not paths:
        raise MissingFile(f"{directory}: no frame_*.png or frame_*.npy label maps")
    return [load_label_map(p) for p in paths]


def _cmd_eval(args: argparse.Namespace) -> int:
    preds = _frame_maps(Path(args.pred))
    gts = _frame_maps(Path(args.gt))
    num_classes = args.num_classes
    if num_classes is None:
        num_classes = max(int(g[g != 255].max()) for g in gts) + 1
    report = build_report(preds, gts, num_classes)
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({k: report[k] for k in ("miou", "mvc8", "mvc16")}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vss", description="zero-shot video semantic segmentation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="segment a video described by a manifest")
    run.add_argument("--manifest", required=True)
    run.add_argument("--config", default=None, help="pipeline config JSON (defaults used if omitted)")
    run.add_argument("--backbone", default=None, help="toy | external:DIR (overrides config)")
    run.add_argument("--out", default=None, help="output directory for maps/overlays/report")
    run.add_argument("--coarse-only", action="store_true", help="skip stage 3, upsample coarse masks")
    run.set_defaults(func=_cmd_run)

    synth = sub.add_parser("synth", help="generate a synthetic video with ground truth")
    synth.add_argument("--spec", default=None, help="SynthSpec JSON (defaults used if omitted)")
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=_cmd_synth)

    ev = sub.add_parser("eval", help="score predicted label maps against ground truth")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--gt", required=True)
    ev.add_argument("--report", required=True)
    ev.add_argument("--num-classes", type=int, default=None)
    ev.set_defaults(func=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VidsegError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

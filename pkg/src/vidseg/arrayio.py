"""Array container and video manifest IO.

This is the wire boundary between the engine and any feature extractor.

Array files use the plain binary container identified by the magic bytes
0x93 "NUMPY", version 1.0:

    \\x93 N U M P Y \\x01 \\x00 | header_len:uint16 LE | header | payload

The header is an ASCII dict literal with keys descr / fortran_order / shape,
space-padded so that the whole prelude (magic + version + length + header)
is a multiple of 64 bytes and ends in a newline. Payload is raw C row-major
little-endian data. Only float32, uint8 and int32 are accepted; extractors
must downcast anything else before writing.

Manifests are UTF-8 JSON documents describing one video: frame count, image
and coarse grid geometry, and per-frame paths for the RGB image, one feature
array per decoder block, one latent array and an optional ground-truth label
map. Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    HeaderParse,
    InconsistentChannels,
    ManifestParse,
    MissingFile,
    ShapeMismatch,
    TruncatedData,
    UnsupportedDtype,
)

MAGIC = b"\x93NUMPY"
VERSION = b"\x01\x00"
HEADER_ALIGN = 64

# dtype name -> container descr code
DESCR_BY_DTYPE = {"float32": "<f4", "uint8": "|u1", "int32": "<i4"}
DTYPE_BY_DESCR = {v: k for k, v in DESCR_BY_DTYPE.items()}


def _shape_repr(shape: tuple[int, ...]) -> str:
    if len(shape) == 1:
        return "(%d,)" % shape[0]
    return "(" + ", ".join(str(int(d)) for d in shape) + ")"


def _header_bytes(descr: str, shape: tuple[int, ...]) -> bytes:
    head = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        descr,
        _shape_repr(shape),
    )
    # pad with spaces so magic+version+len+header is 64-byte aligned,
    # terminating newline included
    unpadded = len(MAGIC) + len(VERSION) + 2 + len(head) + 1
    pad = (-unpadded) % HEADER_ALIGN
    return (head + " " * pad + "\n").encode("ascii")


def write_array(path: str | Path, array: np.ndarray) -> None:
    """Write an array to the container format, byte-stable for given input."""
    arr = np.asarray(array)
    if arr.dtype.name not in DESCR_BY_DTYPE:
        raise UnsupportedDtype(f"dtype {arr.dtype.name} not supported (float32/uint8/int32 only)")
    if arr.ndim == 0:
        raise UnsupportedDtype("scalar (rank-0) arrays not supported")
    descr = DESCR_BY_DTYPE[arr.dtype.name]
    header = _header_bytes(descr, arr.shape)
    payload = np.ascontiguousarray(arr).astype(descr, copy=False).tobytes()
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(VERSION)
        f.write(struct.pack("<H", len(header)))
        f.write(header)
        f.write(payload)


def _parse_header(raw: bytes, path: Path) -> tuple[str, tuple[int, ...]]:
    """Parse the container prelude; returns (dtype name, shape)."""
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not an array container (bad magic bytes)")
    if len(raw) < 10:
        raise HeaderParse(f"{path}: file too short for a container header")
    if raw[6:8] != VERSION:
        raise HeaderParse(f"{path}: unsupported container version {raw[6:8]!r}")
    (header_len,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + header_len:
        raise HeaderParse(f"{path}: header truncated")
    try:
        head = ast.literal_eval(raw[10 : 10 + header_len].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise HeaderParse(f"{path}: malformed header dict: {exc}") from exc
    if not isinstance(head, dict) or set(head) != {"descr", "fortran_order", "shape"}:
        raise HeaderParse(f"{path}: header must have exactly descr/fortran_order/shape keys")
    if head["fortran_order"] is not False:
        raise HeaderParse(f"{path}: fortran_order must be False")
    descr = head["descr"]
    if descr not in DTYPE_BY_DESCR:
        raise UnsupportedDtype(f"{path}: dtype code {descr!r} not supported")
    shape = head["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise HeaderParse(f"{path}: bad shape {shape!r}")
    return DTYPE_BY_DESCR[descr], shape


def read_array_header(path: str | Path) -> tuple[str, tuple[int, ...]]:
    """Read only the header of a container file: (dtype name, shape)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path}: no such file")
    with open(path, "rb") as f:
        prelude = f.read(10)
        if len(prelude) < 10:
            return _parse_header(prelude, path)
        (header_len,) = struct.unpack("<H", prelude[8:10])
        return _parse_header(prelude + f.read(header_len), path)


def read_array(path: str | Path) -> np.ndarray:
    """Read a container file back into an array; strict about malformed input."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path}: no such file")
    raw = path.read_bytes()
    dtype, shape = _parse_header(raw, path)
    (header_len,) = struct.unpack("<H", raw[8:10])
    payload = raw[10 + header_len :]
    count = 1
    for d in shape:
        count *= d
    expected = count * np.dtype(dtype).itemsize
    if len(payload) < expected:
        raise TruncatedData(f"{path}: payload has {len(payload)} bytes, shape requires {expected}")
    if len(payload) > expected:
        raise HeaderParse(f"{path}: {len(payload) - expected} trailing bytes after payload")
    arr = np.frombuffer(payload, dtype=DESCR_BY_DTYPE[dtype]).reshape(shape)
    return arr.astype(dtype, copy=True)


@dataclass(frozen=True)
class FrameRecord:
    """Resolved per-frame paths."""

    image: Path
    features: dict[int, Path]
    latent: Path
    gt: Path | None = None


@dataclass(frozen=True)
class VideoManifest:
    video_id: str
    frame_count: int
    image_size: tuple[int, int]
    coarse_size: tuple[int, int]
    scale: int
    block_ids: tuple[int, ...]
    frames: tuple[FrameRecord, ...]
    num_gt_classes: int | None = None
    # per-block channel counts, filled in during validation
    feature_channels: dict[int, int] = field(default_factory=dict)

    @property
    def has_gt(self) -> bool:
        return all(fr.gt is not None for fr in self.frames)


def _image_size(path: Path) -> tuple[int, int]:
    """(H, W) of an image or array file, reading headers only."""
    if path.suffix == ".npy":
        _, shape = read_array_header(path)
        if len(shape) < 2:
            raise ShapeMismatch(f"{path}: expected at least 2 dims, got shape {shape}")
        return shape[0], shape[1]
    from PIL import Image

    with Image.open(path) as im:
        w, h = im.size
    return h, w


def load_manifest(path: str | Path) -> VideoManifest:
    """Load and eagerly validate a manifest.

    Shape checks open array headers only, never full payloads. Any violated
    invariant raises a typed error; a manifest is never partially loaded.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path}: no such manifest")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestParse(f"{path}: not valid JSON: {exc}") from exc
    base = path.parent

    try:
        video_id = str(doc["video_id"])
        frame_count = int(doc["frame_count"])
        h_img, w_img = (int(v) for v in doc["image_size"])
        h, w = (int(v) for v in doc["coarse_size"])
        scale = int(doc["scale"])
        block_ids = tuple(int(b) for b in doc["block_ids"])
        raw_frames = doc["frames"]
        num_gt_classes = doc.get("num_gt_classes")
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParse(f"{path}: missing or malformed field: {exc}") from exc

    if frame_count < 1:
        raise ManifestParse(f"{path}: frame_count must be positive")
    if len(raw_frames) != frame_count:
        raise ManifestParse(
            f"{path}: frame_count={frame_count} but {len(raw_frames)} frame records"
        )
    if scale < 1 or h * scale != h_img or w * scale != w_img:
        raise ShapeMismatch(
            f"{path}: coarse_size {h}x{w} times scale {scale} must equal image_size "
            f"{h_img}x{w_img}"
        )

    frames: list[FrameRecord] = []
    channels: dict[int, int] = {}
    latent_shape: tuple[int, ...] | None = None
    for i, rec in enumerate(raw_frames):
        try:
            image = base / rec["image"]
            feats = {int(b): base / p for b, p in rec["features"].items()}
            latent = base / rec["latent"]
            gt = base / rec["gt"] if rec.get("gt") else None
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestParse(f"{path}: malformed frame record {i}: {exc}") from exc

        for b in block_ids:
            if b not in feats:
                raise ManifestParse(f"{path}: frame {i} lacks a feature path for block {b}")
            fpath = feats[b]
            _, fshape = read_array_header(fpath)
            if len(fshape) != 3 or fshape[:2] != (h, w):
                raise ShapeMismatch(
                    f"{fpath}: block {b} features are {fshape}, expected ({h}, {w}, C)"
                )
            if b in channels and channels[b] != fshape[2]:
                raise InconsistentChannels(
                    f"{fpath}: block {b} has {fshape[2]} channels, frame 0 had {channels[b]}"
                )
            channels.setdefault(b, fshape[2])

        _, lshape = read_array_header(latent)
        if latent_shape is not None and lshape != latent_shape:
            raise ShapeMismatch(f"{latent}: latent shape {lshape} differs from {latent_shape}")
        latent_shape = lshape

        if not image.is_file():
            raise MissingFile(f"{image}: no such image")
        if _image_size(image) != (h_img, w_img):
            raise ShapeMismatch(f"{image}: image is not {h_img}x{w_img}")

        if gt is not None:
            if not gt.is_file():
                raise MissingFile(f"{gt}: no such ground-truth map")
            if _image_size(gt) != (h_img, w_img):
                raise ShapeMismatch(f"{gt}: ground truth is not {h_img}x{w_img}")

        frames.append(FrameRecord(image=image, features=feats, latent=latent, gt=gt))

    return VideoManifest(
        video_id=video_id,
        frame_count=frame_count,
        image_size=(h_img, w_img),
        coarse_size=(h, w),
        scale=scale,
        block_ids=block_ids,
        frames=tuple(frames),
        num_gt_classes=None if num_gt_classes is None else int(num_gt_classes),
        feature_channels=channels,
    )


def write_manifest(path: str | Path, doc: dict) -> None:
    """Write a manifest document (plain dict, paths already relative)."""
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_image(path: str | Path) -> np.ndarray:
    """RGB image as float32 in [0, 1], shape (H, W, 3)."""
    path = Path(path)
    if path.suffix == ".npy":
        arr = read_array(path)
        if arr.dtype == np.uint8:
            return arr.astype(np.float32) / 255.0
        return arr.astype(np.float32)
    from PIL import Image

    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return rgb.astype(np.float32) / 255.0


def load_label_map(path: str | Path) -> np.ndarray:
    """Integer label map (H, W) from an array file or a paletted/gray PNG."""
    path = Path(path)
    if path.suffix == ".npy":
        arr = read_array(path)
        if arr.ndim != 2:
            raise ShapeMismatch(f"{path}: label map must be 2-D, got shape {arr.shape}")
        return arr.astype(np.int32)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("P", "L", "I"):
            im = im.convert("L")
        return np.asarray(im, dtype=np.int32)

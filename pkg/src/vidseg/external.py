"""Directory protocol for out-of-process modulated rollouts.

When a real diffusion backbone lives in another process (typically on a GPU
host), the engine exchanges files with it instead of calling step() directly.
One request is one directory:

    <root>/<request id>/
        request.json   {"frame_index", "cluster_id", "lambda", "sign",
                        "t_m", "t_f", "b_m"}
        mask.npy       coarse binary mask, uint8, array container format
        plus.png       response: +strength decoded image, 8-bit RGB
        minus.png      response: -strength decoded image, 8-bit RGB
        done           response marker, written last

The engine writes request.json and mask.npy, then polls for the done marker.
The protocol is stateless; re-serving an identical request directory must
reproduce identical responses.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np
from PIL import Image

from .arrayio import read_array, write_array
from .errors import IoError, MalformedRequest

DONE_MARKER = "done"
REQUEST_FILE = "request.json"
MASK_FILE = "mask.npy"
PLUS_FILE = "plus.png"
MINUS_FILE = "minus.png"


def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return rgb.astype(np.float32) / 255.0


class ExternalBackboneClient:
    """Submits modulation requests by directory and waits for responses."""

    def __init__(self, root: str | Path, timeout: float = 600.0, poll_interval: float = 0.05):
        self.root = Path(root)
        self.timeout = timeout
        self.poll_interval = poll_interval
        self.root.mkdir(parents=True, exist_ok=True)

    def request_dir(self, frame_index: int, cluster_id: int) -> Path:
        return self.root / f"req_f{frame_index:06d}_c{cluster_id:03d}"

    def submit(
        self,
        frame_index: int,
        cluster_id: int,
        mask: np.ndarray,
        strength: float,
        t_m: int,
        t_f: int,
        block: int,
    ) -> Path:
        req = self.request_dir(frame_index, cluster_id)
        req.mkdir(parents=True, exist_ok=True)
        write_array(req / MASK_FILE, np.asarray(mask, dtype=np.uint8))
        payload = {
            "frame_index": frame_index,
            "cluster_id": cluster_id,
            "lambda": strength,
            "sign": 1,
            "t_m": t_m,
            "t_f": t_f,
            "b_m": block,
        }
        (req / REQUEST_FILE).write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return req

    def wait(self, req: Path) -> tuple[np.ndarray, np.ndarray]:
        deadline = time.monotonic() + self.timeout
        while not (req / DONE_MARKER).exists():
            if time.monotonic() > deadline:
                raise IoError(f"{req}: no response within {self.timeout}s")
            time.sleep(self.poll_interval)
        return _load_png(req / PLUS_FILE), _load_png(req / MINUS_FILE)

    def difference_images(
        self,
        frame_index: int,
        cluster_id: int,
        mask: np.ndarray,
        strength: float,
        t_m: int,
        t_f: int,
        block: int,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Round-trip one request; returns the decoded +/- images in [0, 1]."""
        req = self.submit(frame_index, cluster_id, mask, strength, t_m, t_f, block)
        return self.wait(req)


def read_request(req: Path) -> tuple[dict, np.ndarray]:
    """Parse one request directory; raises MalformedRequest on anything off."""
    req = Path(req)
    req_file = req / REQUEST_FILE
    if not req_file.is_file():
        raise MalformedRequest(f"{req}: missing {REQUEST_FILE}")
    try:
        payload = json.loads(req_file.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedRequest(f"{req}: unreadable request.json: {exc}") from exc
    required = {"frame_index", "cluster_id", "lambda", "sign", "t_m", "t_f", "b_m"}
    missing = required - set(payload)
    if missing:
        raise MalformedRequest(f"{req}: request.json lacks {sorted(missing)}")
    mask_file = req / MASK_FILE
    if not mask_file.is_file():
        raise MalformedRequest(f"{req}: missing {MASK_FILE}")
    mask = read_array(mask_file)
    if mask.ndim != 2 or not np.isin(mask, (0, 1)).all():
        raise MalformedRequest(f"{req}: mask must be a 2-D binary array")
    return payload, mask


def write_response(req: Path, plus: np.ndarray, minus: np.ndarray) -> None:
    """Write the two decoded images and the done marker (marker last)."""

    def to_png(img: np.ndarray, path: Path) -> None:
        arr = np.clip(np.asarray(img, dtype=np.float64) * 255.0, 0, 255)
        Image.fromarray(np.rint(arr).astype(np.uint8), mode="RGB").save(path)

    req = Path(req)
    to_png(plus, req / PLUS_FILE)
    to_png(minus, req / MINUS_FILE)
    (req / DONE_MARKER).touch()


def pending_requests(root: str | Path) -> list[Path]:
    """Request directories under root that have no done marker yet."""
    root = Path(root)
    if not root.is_dir():
        return []
    out = []
    for child in sorted(root.iterdir()):
        if child.is_dir() and (child / REQUEST_FILE).is_file() and not (child / DONE_MARKER).exists():
            out.append(child)
    return out

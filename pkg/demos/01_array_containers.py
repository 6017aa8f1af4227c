"""Array containers and video manifests: the engine's wire format.

Feature extractors write per-frame arrays in a tiny binary container and a
JSON manifest tying everything together. Run this to see the exact bytes.
"""

import tempfile
from pathlib import Path

import numpy as np

from vidseg import read_array, read_array_header, write_array

workdir = Path(tempfile.mkdtemp(prefix="vidseg_demo_"))
print(f"working in {workdir}\n")

# round trip a feature-like array
features = np.random.default_rng(0).standard_normal((4, 6, 8)).astype(np.float32)
path = workdir / "features.npy"
write_array(path, features)
back = read_array(path)
print(f"wrote {features.shape} {features.dtype}, read back bit-identical:",
      back.tobytes() == features.tobytes())

# the header is a plain ASCII dict, padded to 64-byte alignment
raw = path.read_bytes()
header_len = int.from_bytes(raw[8:10], "little")
print("\nmagic bytes:   ", raw[:8])
print("header length: ", header_len)
print("header text:   ", raw[10 : 10 + header_len].decode("ascii").rstrip())

# headers can be probed without touching the payload; the manifest loader
# validates every referenced file this way
print("\nheader-only read:", read_array_header(path))

# the stock npy loader reads our files too; the container IS npy v1.0
print("numpy agrees:   ", np.array_equal(np.load(path), features))

# only three dtypes cross the wire
try:
    write_array(workdir / "bad.npy", features.astype(np.float64))
except Exception as exc:
    print(f"\nfloat64 rejected as expected: {type(exc).__name__}: {exc}")

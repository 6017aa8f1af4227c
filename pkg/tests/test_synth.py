import hashlib
from pathlib import Path

import numpy as np
import pytest

from vidseg.arrayio import read_array
from vidseg.clustering import kmeans_fit
from vidseg.synth import SynthSpec, gt_grid, synth_generate


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


SMALL = SynthSpec(frames=3, grid=(8, 8), classes=3, noise_sigma=0.5, scale=2, channels=6, seed=7)


class TestGenerate:
    def test_manifest_validates(self, tmp_path):
        manifest = synth_generate(SMALL, tmp_path)
        assert manifest.frame_count == 3
        assert manifest.coarse_size == (8, 8)
        assert manifest.image_size == (16, 16)
        assert manifest.num_gt_classes == 3
        assert manifest.has_gt
        assert manifest.feature_channels == {6: 6, 7: 6, 8: 6}

    def test_same_seed_bit_identical(self, tmp_path):
        synth_generate(SMALL, tmp_path / "a")
        synth_generate(SMALL, tmp_path / "b")
        assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        synth_generate(SMALL, tmp_path / "a")
        import dataclasses

        synth_generate(dataclasses.replace(SMALL, seed=8), tmp_path / "b")
        assert _tree_digest(tmp_path / "a") != _tree_digest(tmp_path / "b")

    def test_zero_noise_kmeans_recovers_partition(self, tmp_path):
        spec = SynthSpec(
            frames=1, grid=(10, 10), classes=4, noise_sigma=0.0, scale=2, channels=8, seed=1
        )
        manifest = synth_generate(spec, tmp_path)
        feats = read_array(manifest.frames[0].features[7])
        gt = gt_grid(spec, 0)
        _, labels = kmeans_fit(feats.reshape(-1, 8), k=4, seed=0)
        labels = labels.reshape(10, 10)
        # same partition up to a label permutation
        mapping = {}
        for cluster in np.unique(labels):
            classes = np.unique(gt[labels == cluster])
            assert len(classes) == 1
            mapping[int(cluster)] = int(classes[0])
        assert len(set(mapping.values())) == 4

    def test_motion_translates_gt_with_wraparound(self, tmp_path):
        import dataclasses

        spec = dataclasses.replace(SMALL, motion=(1, 0), frames=4)
        manifest = synth_generate(spec, tmp_path)
        base = read_array(manifest.frames[0].gt)
        for j in range(4):
            got = read_array(manifest.frames[j].gt)
            want = np.roll(base, j * spec.scale, axis=0)
            assert np.array_equal(got, want), f"frame {j}"

    def test_longer_video_has_identical_prefix(self, tmp_path):
        import dataclasses

        short = synth_generate(SMALL, tmp_path / "short")
        long = synth_generate(dataclasses.replace(SMALL, frames=6), tmp_path / "long")
        for i in range(3):
            for b in (6, 7, 8):
                a = read_array(short.frames[i].features[b])
                bb = read_array(long.frames[i].features[b])
                assert a.tobytes() == bb.tobytes()
            assert (
                read_array(short.frames[i].gt).tobytes()
                == read_array(long.frames[i].gt).tobytes()
            )

    def test_solvability_guard(self):
        with pytest.raises(ValueError):
            SynthSpec(prototype_separation=1.0, noise_sigma=1.0).validate()
        SynthSpec(prototype_separation=10.0, noise_sigma=1.0).validate()

    def test_blocks_share_prototypes_not_noise(self, tmp_path):
        manifest = synth_generate(SMALL, tmp_path)
        a = read_array(manifest.frames[0].features[6])
        b = read_array(manifest.frames[0].features[7])
        assert not np.array_equal(a, b)  # independent noise
        gt = gt_grid(SMALL, 0)
        # averaging blocks shrinks noise toward the shared prototypes
        mean3 = (
            a.astype(np.float64)
            + b.astype(np.float64)
            + read_array(manifest.frames[0].features[8]).astype(np.float64)
        ) / 3.0
        prototypes = np.zeros((3, 6))
        for k in range(3):
            prototypes[k, k] = SMALL.prototype_separation
        resid_single = np.linalg.norm(a - prototypes[gt])
        resid_mean = np.linalg.norm(mean3 - prototypes[gt])
        assert resid_mean < resid_single

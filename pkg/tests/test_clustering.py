import numpy as np
import pytest

from vidseg.clustering import ClusterModel, kmeans_assign, kmeans_fit
from vidseg.errors import ChannelMismatch, NonFiniteInput, TooFewPoints


def brute_force_assign(points, centroids):
    """Independent nearest-centroid scan, lowest index wins ties."""
    labels = np.empty(len(points), dtype=np.int64)
    for i, p in enumerate(points):
        d2 = np.array([np.sum((p - c) ** 2) for c in centroids])
        labels[i] = int(np.argmin(d2))
    return labels


def reference_lloyd(points, init_centroids, iters):
    """Plain Lloyd reference run, no empty-cluster handling needed for blobs."""
    centroids = init_centroids.copy()
    for _ in range(iters):
        labels = brute_force_assign(points, centroids)
        for l in range(len(centroids)):
            members = points[labels == l]
            if len(members):
                centroids[l] = members.mean(axis=0)
    return centroids, brute_force_assign(points, centroids)


class TestFit:
    def test_four_corner_points_zero_inertia(self):
        pts = np.array(
            [[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]], dtype=np.float64
        )
        model, labels = kmeans_fit(pts, k=4, seed=1)
        assert model.inertia == 0.0
        assert sorted(labels.tolist()) == [0, 1, 2, 3]

    def test_two_blobs_match_reference_lloyd(self):
        rng = np.random.default_rng(42)
        dim = 5
        a = rng.normal(0.0, 1.0, size=(50, dim))
        b = rng.normal(10.0, 1.0, size=(50, dim))
        pts = np.concatenate([a, b])
        model, labels = kmeans_fit(pts, k=2, seed=0)

        # labels separate the blobs exactly
        first, second = labels[:50], labels[50:]
        assert len(set(first.tolist())) == 1
        assert len(set(second.tolist())) == 1
        assert first[0] != second[0]

        # centroids within 3 sigma/sqrt(50) of the blob means, and equal to an
        # independent Lloyd run seeded at the converged positions
        blob_means = np.stack([a.mean(axis=0), b.mean(axis=0)])
        got = model.centroids[np.argsort(model.centroids[:, 0])]
        want = blob_means[np.argsort(blob_means[:, 0])]
        assert np.allclose(got, want, atol=3.0 / np.sqrt(50))

        ref_centroids, ref_labels = reference_lloyd(pts, model.centroids.copy(), iters=5)
        assert np.allclose(ref_centroids, model.centroids)
        assert np.array_equal(ref_labels, labels)

    def test_k_exceeds_distinct_points(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 0.0]])
        with pytest.raises(TooFewPoints):
            kmeans_fit(pts, k=5, seed=0)
        with pytest.raises(TooFewPoints):
            kmeans_fit(pts, k=4, seed=0)  # only 3 distinct

    def test_non_finite_rejected(self):
        pts = np.array([[0.0, np.nan], [1.0, 1.0]])
        with pytest.raises(NonFiniteInput):
            kmeans_fit(pts, k=1, seed=0)

    def test_inertia_history_non_increasing(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            pts = rng.standard_normal((120, 4))
            model, _ = kmeans_fit(pts, k=6, seed=trial)
            hist = model.inertia_history
            assert all(hist[i + 1] <= hist[i] for i in range(len(hist) - 1))
            assert model.inertia == hist[-1]

    def test_determinism(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((200, 8))
        m1, l1 = kmeans_fit(pts, k=7, seed=99)
        m2, l2 = kmeans_fit(pts, k=7, seed=99)
        assert m1.centroids.tobytes() == m2.centroids.tobytes()
        assert np.array_equal(l1, l2)

    def test_duplicate_heavy_input_keeps_k_clusters(self):
        # many duplicates force empty-cluster reseeding paths
        pts = np.repeat(np.arange(6, dtype=np.float64)[:, None], 30, axis=0)
        model, labels = kmeans_fit(pts, k=6, seed=3)
        assert len(np.unique(labels)) == 6
        assert model.inertia == 0.0


class TestAssign:
    def test_cell_exactly_at_centroid(self):
        model, _ = kmeans_fit(np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]), k=3, seed=0)
        grid = np.broadcast_to(model.centroids[2].astype(np.float32), (1, 1, 2)).copy()
        assert kmeans_assign(model, grid)[0, 0] == 2

    def test_equidistant_tie_breaks_low(self):
        centroids = np.array([[5.0, 5.0], [0.0, 0.0], [9.0, 9.0], [2.0, 2.0]])
        model = ClusterModel(
            centroids=centroids, L=4, seed=0, inertia=0.0, inertia_history=(0.0,)
        )
        # (1, 1) is exactly equidistant from centroids 1 and 3
        grid = np.array([[[1.0, 1.0]]], dtype=np.float32)
        assert kmeans_assign(model, grid)[0, 0] == 1

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(11)
        pts = rng.standard_normal((100, 6))
        model, _ = kmeans_fit(pts, k=5, seed=2)
        grid = rng.standard_normal((8, 8, 6)).astype(np.float32)
        got = kmeans_assign(model, grid)
        want = brute_force_assign(
            grid.reshape(-1, 6).astype(np.float64), model.centroids
        ).reshape(8, 8)
        assert np.array_equal(got, want)

    def test_channel_mismatch(self):
        model, _ = kmeans_fit(np.array([[0.0, 0.0], [1.0, 1.0]]), k=2, seed=0)
        with pytest.raises(ChannelMismatch):
            kmeans_assign(model, np.zeros((2, 2, 5), dtype=np.float32))

    def test_partition_property(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((64, 3))
        model, _ = kmeans_fit(pts, k=4, seed=0)
        mask = kmeans_assign(model, rng.standard_normal((6, 6, 3)).astype(np.float32))
        onehots = [(mask == l) for l in range(4)]
        total = np.zeros((6, 6), dtype=int)
        for oh in onehots:
            total += oh.astype(int)
        assert (total == 1).all()

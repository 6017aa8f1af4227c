import numpy as np
import pytest

from vidseg.errors import NoValidPixels, ShapeMismatch, WindowTooLong
from vidseg.metrics import IGNORE, apply_assignment, assign_gt_labels, miou, mvc


class TestAssignment:
    def test_coinciding_regions(self):
        pred = np.array([[0, 0, 1], [0, 0, 1], [2, 2, 2]])
        gt = np.array([[7, 7, 4], [7, 7, 4], [9, 9, 9]])
        assert assign_gt_labels(pred, gt) == {0: 7, 1: 4, 2: 9}

    def test_majority_overlap(self):
        # cluster 0: 60% class 1, 40% class 2
        pred = np.zeros((1, 10), dtype=int)
        gt = np.array([[1, 1, 1, 1, 1, 1, 2, 2, 2, 2]])
        assert assign_gt_labels(pred, gt)[0] == 1

    def test_fully_ignored_cluster(self):
        pred = np.array([[0, 1]])
        gt = np.array([[IGNORE, 3]])
        assignment = assign_gt_labels(pred, gt)
        assert assignment[0] == IGNORE
        assert assignment[1] == 3

    def test_absent_cluster_maps_to_ignore(self):
        pred = np.zeros((2, 2), dtype=int)
        gt = np.ones((2, 2), dtype=int)
        assignment = assign_gt_labels(pred, gt, num_clusters=3)
        assert assignment == {0: 1, 1: IGNORE, 2: IGNORE}

    def test_overlap_tie_smaller_class(self):
        pred = np.zeros((1, 4), dtype=int)
        gt = np.array([[5, 5, 2, 2]])
        assert assign_gt_labels(pred, gt)[0] == 2

    def test_apply_preserves_partition(self):
        rng = np.random.default_rng(0)
        pred = rng.integers(0, 4, size=(6, 6))
        gt = rng.integers(0, 3, size=(6, 6))
        assignment = assign_gt_labels(pred, gt, num_clusters=4)
        mapped = apply_assignment(pred, assignment)
        for l in range(4):
            values = np.unique(mapped[pred == l])
            assert len(values) <= 1  # each segment moves as one unit

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            assign_gt_labels(np.zeros((2, 2), int), np.zeros((3, 3), int))


class TestMiou:
    def test_perfect_prediction(self):
        rng = np.random.default_rng(0)
        gts = [rng.integers(0, 5, size=(8, 8)) for _ in range(4)]
        score, per_class = miou(gts, gts, num_classes=5)
        assert score == 1.0
        assert all(v == 1.0 for v in per_class.values())

    def test_hand_counted_quarter(self):
        # GT [[0,0],[1,1]], pred all zeros:
        # class 0: TP=2 FP=2 FN=0 -> 0.5; class 1: TP=0 FN=2 -> 0.0
        gt = np.array([[0, 0], [1, 1]])
        pred = np.zeros((2, 2), dtype=int)
        score, per_class = miou([pred], [gt], num_classes=2)
        assert per_class == {0: 0.5, 1: 0.0}
        assert score == 0.25

    def test_all_ignore_raises(self):
        gt = np.full((3, 3), IGNORE)
        with pytest.raises(NoValidPixels):
            miou([np.zeros((3, 3), int)], [gt], num_classes=2)

    def test_ignore_pixels_excluded(self):
        gt = np.array([[0, IGNORE], [IGNORE, 1]])
        pred = np.array([[0, 1], [0, 1]])  # wrong only under ignore
        score, _ = miou([pred], [gt], num_classes=2)
        assert score == 1.0

    def test_ignore_prediction_counts_as_miss(self):
        gt = np.array([[0, 0]])
        pred = np.array([[0, IGNORE]])
        score, per_class = miou([pred], [gt], num_classes=1)
        assert per_class[0] == 0.5  # TP=1, FN=1, FP=0

    def test_absent_class_excluded_from_mean(self):
        gt = np.array([[0, 0]])
        pred = np.array([[0, 0]])
        score, per_class = miou([pred], [gt], num_classes=10)
        assert score == 1.0
        assert list(per_class) == [0]

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(1)
        gts = [rng.integers(0, 4, size=(6, 6)) for _ in range(3)]
        preds = [rng.integers(0, 4, size=(6, 6)) for _ in range(3)]
        base, _ = miou(preds, gts, num_classes=4)
        perm = np.array([2, 3, 1, 0])
        permuted, _ = miou([perm[p] for p in preds], [perm[g] for g in gts], num_classes=4)
        assert permuted == pytest.approx(base)


class TestMvc:
    def test_perfect_static_video(self):
        gt = np.random.default_rng(0).integers(0, 3, size=(5, 5))
        maps = [gt] * 6
        assert mvc(maps, maps, n=4) == 1.0

    def test_hand_enumerated_three_quarters(self):
        # 3 frames of 2x2, GT all class 0; predictions flip one pixel to 1 in
        # frame 2. Both length-2 windows have |G_0| = 4 and |G_0 & P_0| = 3.
        gt = [np.zeros((2, 2), dtype=int) for _ in range(3)]
        preds = [np.zeros((2, 2), dtype=int) for _ in range(3)]
        preds[1][0, 1] = 1
        assert mvc(preds, gt, n=2) == 0.75

    def test_window_too_long(self):
        maps = [np.zeros((2, 2), int)] * 14
        with pytest.raises(WindowTooLong):
            mvc(maps, maps, n=16)

    def test_moving_gt_skips_nonpersistent_pixels(self):
        # class 1 occupies a moving column: only the static background persists
        gts, preds = [], []
        for j in range(4):
            g = np.zeros((2, 4), dtype=int)
            g[:, j] = 1
            gts.append(g)
            preds.append(g.copy())
        assert mvc(preds, gts, n=2) == 1.0
        # the full-length window has no persistent pixel at all
        with pytest.raises(NoValidPixels):
            mvc(preds, gts, n=4)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(2)
        gts = [rng.integers(0, 3, size=(4, 4))] * 5
        preds = [rng.integers(0, 3, size=(4, 4)) for _ in range(5)]
        base = mvc(preds, gts, n=3)
        perm = np.array([1, 2, 0])
        assert mvc([perm[p] for p in preds], [perm[g] for g in gts], n=3) == pytest.approx(base)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        gts = [rng.integers(0, 3, size=(6, 6))] * 8
        preds = [rng.integers(0, 3, size=(6, 6)) for _ in range(8)]
        score = mvc(preds, gts, n=4)
        assert 0.0 <= score <= 1.0

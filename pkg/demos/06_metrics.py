"""Scoring class-agnostic segmentations: label assignment, mIoU, mVC.

Clusters carry no class semantics, so evaluation first maps every cluster to
the ground-truth class it overlaps most on frame 1, then scores the video.
"""

import numpy as np

from vidseg import apply_assignment, assign_gt_labels, miou, mvc

# a 4x4 frame with two GT classes and one ignored border pixel
gt0 = np.array(
    [
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [255, 0, 1, 1],
    ]
)
# three clusters: 0 and 2 split class 0, cluster 1 covers class 1
pred0 = np.array(
    [
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [2, 2, 1, 1],
        [2, 2, 1, 1],
    ]
)

assignment = assign_gt_labels(pred0, gt0, num_clusters=3)
print(f"assignment: {assignment}  (two clusters merge into class 0)")

mapped = apply_assignment(pred0, assignment)
print(f"mapped prediction equals GT on valid pixels: "
      f"{bool((mapped == gt0)[gt0 != 255].all())}")

# mIoU counts TP/FP/FN per class over all frames, ignore pixels excluded
score, per_class = miou([mapped], [gt0], num_classes=2)
print(f"\nmIoU: {score}  per-class: {per_class}")

# the textbook failure: predicting everything as class 0
all_zero = np.zeros_like(gt0)
gt_simple = np.array([[0, 0], [1, 1]])
score, per_class = miou([all_zero[:2, :2]], [gt_simple], num_classes=2)
print(f"all-zero prediction on [[0,0],[1,1]]: mIoU={score} per-class={per_class}")

# mVC: consistency over sliding windows. One flickering pixel in the middle
# frame costs a quarter of each 2-frame window on a 2x2 video.
gts = [np.zeros((2, 2), dtype=int)] * 3
preds = [np.zeros((2, 2), dtype=int) for _ in range(3)]
preds[1][0, 1] = 1
print(f"\nmVC2 with one flickered pixel: {mvc(preds, gts, n=2)}")
print(f"mVC3 (the flicker hits the single window once): {mvc(preds, gts, n=3)}")

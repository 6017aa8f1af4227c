"""Full-resolution upsampling of coarse masks via masked modulation.

Per cluster, two denoising trajectories are perturbed by +strength and
-strength inside the cluster's mask while a third, unmodulated reference
trajectory runs alongside. After every step in the modulation window the
perturbed latents are blended with the reference so nothing changes outside
the mask. The squared distance between the two decoded images localizes the
cluster at image resolution; the argmax over clusters yields the label map.

The toy backbone realizes the same mechanics with a linear contraction
step, which makes the decoded difference an exact geometric sum and lets
tests pin the whole stage against a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    EmptyList,
    InvalidSchedule,
    InvalidTarget,
    ShapeMismatch,
    SOutOfRange,
)


@dataclass(frozen=True)
class LatentState:
    """One entry of a per-frame latent trajectory."""

    values: np.ndarray  # (h_z, w_z, c_z) float32
    t: int


@dataclass(frozen=True)
class Modulation:
    """Perturbation request for one denoising step."""

    mask: np.ndarray  # (h, w) binary, coarse resolution
    sign: int  # +1 or -1
    strength: float
    block: int


class Backbone(Protocol):
    """What a denoising backbone must provide to drive the rollout.

    One instance serves every frame of a video; trajectory state lives in the
    LatentState values passed back in. step must be deterministic, and with
    modulation=None equal latents must produce equal outputs.
    """

    latent_mask_resolution: tuple[int, int]

    def init_latent(self, frame_index: int, t_inv: int) -> LatentState: ...

    def step(
        self, frame_index: int, latent: LatentState, t: int, modulation: Modulation | None = None
    ) -> LatentState: ...

    def decode(self, latent: LatentState) -> np.ndarray: ...


def nearest_resize(arr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resample of the two leading dims to (height, width).

    Index mapping is src_index = (dst_index * src_size) // dst_size, in exact
    integer arithmetic.
    """
    h_src, w_src = arr.shape[:2]
    h_dst, w_dst = size
    rows = (np.arange(h_dst) * h_src) // h_dst
    cols = (np.arange(w_dst) * w_src) // w_dst
    return arr[rows][:, cols]


def upsample_fullres(labels: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor upsample of a label map or mask; label set preserved."""
    h_src, w_src = labels.shape[:2]
    h_dst, w_dst = size
    if h_dst < h_src or w_dst < w_src:
        raise InvalidTarget(f"target {size} smaller than source {(h_src, w_src)}")
    return nearest_resize(labels, size)


class ToyBackbone:
    """Linear contraction backbone with analytically known behavior.

    step(z, t) = alpha * z + (1 - alpha) * target; a modulated step adds
    sign * strength * gamma(t) inside the mask (resampled to the latent grid).
    decode is a nearest-neighbor upsample by the scale factor followed by a
    fixed channel mixing matrix. No clamping anywhere, so the plus/minus
    image difference stays an exact linear function of the injected kicks.
    """

    def __init__(
        self,
        targets: Sequence[np.ndarray],
        scale: int,
        alpha: float = 0.5,
        gamma: float | Callable[[int], float] = 1.0,
        mixing: np.ndarray | None = None,
    ):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        self.targets = [np.asarray(t, dtype=np.float32) for t in targets]
        if not self.targets:
            raise ValueError("need at least one frame target")
        shape = self.targets[0].shape
        if any(t.shape != shape for t in self.targets):
            raise ShapeMismatch("frame targets disagree on latent shape")
        if len(shape) != 3:
            raise ShapeMismatch(f"latent targets must be (h_z, w_z, c_z), got {shape}")
        self.scale = int(scale)
        self.alpha = float(alpha)
        self._gamma = gamma if callable(gamma) else (lambda t, g=float(gamma): g)
        c_z = shape[2]
        if mixing is None:
            if c_z != 3:
                raise ShapeMismatch("identity mixing requires 3 latent channels")
            mixing = np.eye(3, dtype=np.float32)
        self.mixing = np.asarray(mixing, dtype=np.float32)
        if self.mixing.shape != (3, c_z):
            raise ShapeMismatch(f"mixing must be (3, {c_z}), got {self.mixing.shape}")
        self.latent_mask_resolution = (shape[0], shape[1])

    def gamma(self, t: int) -> float:
        g = float(self._gamma(t))
        if g < 0:
            raise ValueError("gamma must be >= 0")
        return g

    def init_latent(self, frame_index: int, t_inv: int) -> LatentState:
        return LatentState(values=self.targets[frame_index].copy(), t=0)

    def step(
        self, frame_index: int, latent: LatentState, t: int, modulation: Modulation | None = None
    ) -> LatentState:
        z = latent.values
        target = self.targets[frame_index]
        if z.shape != target.shape:
            raise ShapeMismatch(f"latent {z.shape} vs target {target.shape}")
        out = (self.alpha * z + (np.float32(1.0) - np.float32(self.alpha)) * target).astype(
            np.float32
        )
        if modulation is not None:
            mask = nearest_resize(
                np.asarray(modulation.mask), self.latent_mask_resolution
            ).astype(np.float32)
            kick = np.float32(modulation.sign * modulation.strength * self.gamma(t))
            out = out + kick * mask[:, :, None]
        return LatentState(values=out, t=t)

    def decode(self, latent: LatentState) -> np.ndarray:
        h_z, w_z, _ = latent.values.shape
        up = nearest_resize(latent.values, (h_z * self.scale, w_z * self.scale))
        return (up @ self.mixing.T).astype(np.float32)


def blend_latents(z: LatentState, z_hat: LatentState, mask: np.ndarray) -> LatentState:
    """Keep the modulated latent inside the mask, the reference outside.

    out = z * (1 - M) + z_hat * M, elementwise; a 0/1 mask makes both branches
    bit-exact copies of their source.
    """
    if z.values.shape != z_hat.values.shape:
        raise ShapeMismatch(f"latents differ: {z.values.shape} vs {z_hat.values.shape}")
    if z.t != z_hat.t:
        raise ShapeMismatch(f"latents at different steps: {z.t} vs {z_hat.t}")
    mask = np.asarray(mask)
    if mask.shape != z.values.shape[:2]:
        mask = nearest_resize(mask, z.values.shape[:2])
    m = mask.astype(np.float32)[:, :, None]
    blended = z.values * (np.float32(1.0) - m) + z_hat.values * m
    return LatentState(values=blended.astype(np.float32), t=z.t)


def reference_trajectory(
    backbone: Backbone, frame_index: int, t_f: int, t_inv: int
) -> list[LatentState]:
    """Unmodulated trajectory: the initial latent plus the state after each step.

    Steps are counted 1..t_f; the rollout starts at max(1, t_f - t_inv + 1),
    so the default t_inv = t_f runs the full schedule.
    """
    state = backbone.init_latent(frame_index, t_inv)
    states = [state]
    for t in range(max(1, t_f - t_inv + 1), t_f + 1):
        state = backbone.step(frame_index, state, t, None)
        states.append(state)
    return states


def modulated_rollout(
    backbone: Backbone,
    frame_index: int,
    mask: np.ndarray,
    strength: float,
    t_m: int,
    t_f: int,
    t_inv: int,
    block: int = 7,
    reference: list[LatentState] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the reference and the +/- perturbed trajectories for one cluster.

    Within [t_m, t_f] the perturbed trajectories receive the masked kick each
    step and are blended against the reference afterwards; before t_m all
    three trajectories coincide. Returns the two decoded images. A
    precomputed reference trajectory may be shared across clusters of the
    same frame.
    """
    if t_m > t_f:
        raise InvalidSchedule(f"t_m={t_m} exceeds t_f={t_f}")
    if t_inv < t_m:
        raise InvalidSchedule(f"t_inv={t_inv} below t_m={t_m}")
    mask = np.asarray(mask)
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("modulation mask must be binary")

    if reference is None:
        reference = reference_trajectory(backbone, frame_index, t_f, t_inv)
    start = max(1, t_f - t_inv + 1)
    mod_start = max(start, t_m)
    # trajectories are identical to the reference until the first modulated step
    z_plus = reference[mod_start - start]
    z_minus = z_plus
    for t in range(mod_start, t_f + 1):
        z_ref = reference[t - start + 1]
        z_plus = backbone.step(frame_index, z_plus, t, Modulation(mask, +1, strength, block))
        z_minus = backbone.step(frame_index, z_minus, t, Modulation(mask, -1, strength, block))
        z_plus = blend_latents(z_ref, z_plus, mask)
        z_minus = blend_latents(z_ref, z_minus, mask)
    return backbone.decode(z_plus), backbone.decode(z_minus)


def difference_map(i_plus: np.ndarray, i_minus: np.ndarray) -> np.ndarray:
    """Per-pixel squared L2 distance between the two decoded images.

    Channels are summed innermost, matching a scalar reference loop exactly.
    """
    i_plus = np.asarray(i_plus, dtype=np.float32)
    i_minus = np.asarray(i_minus, dtype=np.float32)
    if i_plus.shape != i_minus.shape:
        raise ShapeMismatch(f"images differ: {i_plus.shape} vs {i_minus.shape}")
    diff = i_plus - i_minus
    return np.sum(diff * diff, axis=-1, dtype=np.float32)


def filter_difference(diff: np.ndarray, mask_fullres: np.ndarray, s: float) -> np.ndarray:
    """Scale the difference map outside the mask by the filtering strength s."""
    if not 0.0 <= s <= 1.0:
        raise SOutOfRange(f"filtering strength {s} outside [0, 1]")
    diff = np.asarray(diff, dtype=np.float32)
    mask_fullres = np.asarray(mask_fullres)
    if diff.shape != mask_fullres.shape:
        raise ShapeMismatch(f"map {diff.shape} vs mask {mask_fullres.shape}")
    m = mask_fullres.astype(np.float32)
    return (diff * m + np.float32(s) * (diff * (np.float32(1.0) - m))).astype(np.float32)


def label_from_differences(maps: list[np.ndarray]) -> np.ndarray:
    """Per-pixel argmax over per-cluster difference maps; ties to the lowest index."""
    if len(maps) == 0:
        raise EmptyList("need at least one difference map")
    shapes = {np.asarray(m).shape for m in maps}
    if len(shapes) != 1:
        raise ShapeMismatch(f"difference maps disagree on shape: {sorted(shapes)}")
    stack = np.stack([np.asarray(m) for m in maps])
    return stack.argmax(axis=0).astype(np.int32)

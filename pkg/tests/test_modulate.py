import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidseg.errors import EmptyList, InvalidSchedule, InvalidTarget, ShapeMismatch, SOutOfRange
from vidseg.modulate import (
    LatentState,
    ToyBackbone,
    blend_latents,
    difference_map,
    filter_difference,
    label_from_differences,
    modulated_rollout,
    reference_trajectory,
    upsample_fullres,
)


def unroll_deviation(alpha, gamma, lam, t_m, t_f, t_inv):
    """Symbolic scalar unroll of the plus-trajectory deviation from the reference.

    Each step contracts the deviation by alpha, then the steps inside
    [t_m, t_f] add lam * gamma(t). Independent of the array implementation.
    """
    start = max(1, t_f - t_inv + 1)
    d = 0.0
    for t in range(start, t_f + 1):
        d = alpha * d
        if t_m <= t <= t_f:
            d += lam * gamma(t)
    return d


def _toy(rng, h=4, w=4, frames=1, scale=2, alpha=0.5, gamma=1.0):
    targets = [rng.standard_normal((h, w, 3)).astype(np.float32) for _ in range(frames)]
    return ToyBackbone(targets=targets, scale=scale, alpha=alpha, gamma=gamma)


class TestBlend:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_all_ones_returns_modulated(self, seed):
        rng = np.random.default_rng(seed)
        z = LatentState(rng.standard_normal((3, 4, 2)).astype(np.float32), t=5)
        z_hat = LatentState(rng.standard_normal((3, 4, 2)).astype(np.float32), t=5)
        out = blend_latents(z, z_hat, np.ones((3, 4)))
        assert out.values.tobytes() == z_hat.values.tobytes()

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_all_zeros_returns_reference(self, seed):
        rng = np.random.default_rng(seed)
        z = LatentState(rng.standard_normal((3, 4, 2)).astype(np.float32), t=5)
        z_hat = LatentState(rng.standard_normal((3, 4, 2)).astype(np.float32), t=5)
        out = blend_latents(z, z_hat, np.zeros((3, 4)))
        assert out.values.tobytes() == z.values.tobytes()

    def test_half_mask_bit_exact(self):
        rng = np.random.default_rng(0)
        z = LatentState(rng.standard_normal((4, 4, 3)).astype(np.float32), t=1)
        z_hat = LatentState(rng.standard_normal((4, 4, 3)).astype(np.float32), t=1)
        mask = np.zeros((4, 4))
        mask[:, :2] = 1
        out = blend_latents(z, z_hat, mask)
        assert out.values[:, :2].tobytes() == z_hat.values[:, :2].tobytes()
        assert out.values[:, 2:].tobytes() == z.values[:, 2:].tobytes()

    def test_idempotent_on_equal_latents(self):
        rng = np.random.default_rng(1)
        z = LatentState(rng.standard_normal((3, 3, 2)).astype(np.float32), t=0)
        out = blend_latents(z, z, np.random.default_rng(2).integers(0, 2, (3, 3)))
        assert out.values.tobytes() == z.values.tobytes()

    def test_shape_mismatch(self):
        z = LatentState(np.zeros((2, 2, 1), np.float32), t=0)
        other = LatentState(np.zeros((3, 3, 1), np.float32), t=0)
        with pytest.raises(ShapeMismatch):
            blend_latents(z, other, np.ones((2, 2)))


class TestRollout:
    def test_zero_strength_identical_images(self):
        backbone = _toy(np.random.default_rng(0))
        mask = np.zeros((4, 4), dtype=np.uint8)
        mask[1:3, 1:3] = 1
        plus, minus = modulated_rollout(backbone, 0, mask, 0.0, t_m=3, t_f=6, t_inv=6)
        assert plus.tobytes() == minus.tobytes()

    def test_empty_mask_equals_reference(self):
        backbone = _toy(np.random.default_rng(1))
        plus, minus = modulated_rollout(
            backbone, 0, np.zeros((4, 4), dtype=np.uint8), 50.0, t_m=3, t_f=6, t_inv=6
        )
        ref = reference_trajectory(backbone, 0, t_f=6, t_inv=6)[-1]
        expected = backbone.decode(ref)
        assert plus.tobytes() == expected.tobytes()
        assert minus.tobytes() == expected.tobytes()

    def test_closed_form_difference(self):
        alpha, lam, t_m, t_f, t_inv = 0.5, 50.0, 20, 25, 25
        backbone = _toy(np.random.default_rng(2), h=6, w=6, scale=3, alpha=alpha)
        mask = np.zeros((6, 6), dtype=np.uint8)
        mask[2:5, 1:4] = 1
        plus, minus = modulated_rollout(backbone, 0, mask, lam, t_m, t_f, t_inv)
        d = unroll_deviation(alpha, lambda t: 1.0, lam, t_m, t_f, t_inv)

        inside = upsample_fullres(mask, (18, 18)).astype(bool)
        per_channel = plus - minus
        assert np.allclose(per_channel[inside], 2.0 * d, rtol=1e-6)
        assert np.all(per_channel[~inside] == 0.0)

        diff = difference_map(plus, minus)
        assert np.all(diff[~inside] == 0.0)
        assert np.allclose(diff[inside], 3.0 * (2.0 * d) ** 2, rtol=1e-6)

    def test_closed_form_with_varying_gamma(self):
        gamma = lambda t: 0.25 * t
        backbone = _toy(np.random.default_rng(3), alpha=0.75, gamma=gamma)
        mask = np.ones((4, 4), dtype=np.uint8)
        plus, minus = modulated_rollout(backbone, 0, mask, 2.0, t_m=2, t_f=7, t_inv=7)
        d = unroll_deviation(0.75, gamma, 2.0, 2, 7, 7)
        assert np.allclose(plus - minus, 2.0 * d, rtol=1e-6)

    def test_shared_reference_matches_fresh(self):
        backbone = _toy(np.random.default_rng(4))
        mask = np.zeros((4, 4), dtype=np.uint8)
        mask[0, 0] = 1
        ref = reference_trajectory(backbone, 0, t_f=6, t_inv=6)
        a = modulated_rollout(backbone, 0, mask, 5.0, 3, 6, 6)
        b = modulated_rollout(backbone, 0, mask, 5.0, 3, 6, 6, reference=ref)
        assert a[0].tobytes() == b[0].tobytes()
        assert a[1].tobytes() == b[1].tobytes()

    def test_sign_symmetry_of_difference(self):
        backbone = _toy(np.random.default_rng(5))
        mask = np.zeros((4, 4), dtype=np.uint8)
        mask[2:, 2:] = 1
        plus, minus = modulated_rollout(backbone, 0, mask, 7.0, 2, 5, 5)
        assert np.array_equal(difference_map(plus, minus), difference_map(minus, plus))

    def test_invalid_schedules(self):
        backbone = _toy(np.random.default_rng(6))
        mask = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidSchedule):
            modulated_rollout(backbone, 0, mask, 1.0, t_m=7, t_f=5, t_inv=9)
        with pytest.raises(InvalidSchedule):
            modulated_rollout(backbone, 0, mask, 1.0, t_m=4, t_f=5, t_inv=3)

    def test_non_binary_mask_rejected(self):
        backbone = _toy(np.random.default_rng(7))
        with pytest.raises(ValueError):
            modulated_rollout(backbone, 0, np.full((4, 4), 0.5), 1.0, 2, 4, 4)


class TestDifferenceMap:
    def test_identical_images_zero(self):
        img = np.random.default_rng(0).random((5, 5, 3)).astype(np.float32)
        assert np.all(difference_map(img, img) == 0.0)

    def test_single_pixel_quarter(self):
        a = np.zeros((3, 3, 3), dtype=np.float32)
        b = a.copy()
        b[1, 2, 0] = 0.5
        diff = difference_map(a, b)
        assert diff[1, 2] == np.float32(0.25)
        assert np.count_nonzero(diff) == 1

    def test_matches_scalar_loop_exactly(self):
        rng = np.random.default_rng(1)
        a = rng.random((6, 7, 3)).astype(np.float32)
        b = rng.random((6, 7, 3)).astype(np.float32)
        got = difference_map(a, b)
        want = np.zeros((6, 7), dtype=np.float32)
        for i in range(6):
            for j in range(7):
                acc = np.float32(0.0)
                for c in range(3):
                    d = a[i, j, c] - b[i, j, c]
                    acc += d * d
                want[i, j] = acc
        assert got.tobytes() == want.tobytes()


class TestFilter:
    def _data(self):
        rng = np.random.default_rng(0)
        diff = rng.random((6, 6)).astype(np.float32)
        mask = np.zeros((6, 6), dtype=np.uint8)
        mask[:3] = 1
        return diff, mask

    def test_s_one_is_identity(self):
        diff, mask = self._data()
        assert filter_difference(diff, mask, 1.0).tobytes() == diff.tobytes()

    def test_s_zero_zeroes_off_mask(self):
        diff, mask = self._data()
        out = filter_difference(diff, mask, 0.0)
        assert np.all(out[mask == 0] == 0.0)
        assert out[mask == 1].tobytes() == diff[mask == 1].tobytes()

    def test_default_strength_scales_off_mask(self):
        diff = np.ones((2, 2), dtype=np.float32)
        mask = np.zeros((2, 2), dtype=np.uint8)
        out = filter_difference(diff, mask, 0.7)
        assert np.all(out == np.float32(0.7))

    def test_monotone(self):
        diff, mask = self._data()
        for s in (0.0, 0.3, 0.7, 1.0):
            out = filter_difference(diff, mask, s)
            assert np.all(out <= diff)

    def test_out_of_range(self):
        diff, mask = self._data()
        with pytest.raises(SOutOfRange):
            filter_difference(diff, mask, 1.5)


class TestArgmaxAndUpsample:
    def test_single_cluster_constant_zero(self):
        out = label_from_differences([np.random.default_rng(0).random((4, 4)).astype(np.float32)])
        assert np.all(out == 0)

    def test_dominant_map_wins(self):
        low = np.zeros((3, 3), dtype=np.float32)
        high = np.ones((3, 3), dtype=np.float32)
        assert np.all(label_from_differences([low, high]) == 1)

    def test_matches_per_pixel_scan(self):
        rng = np.random.default_rng(1)
        maps = [rng.random((5, 6)).astype(np.float32) for _ in range(5)]
        got = label_from_differences(maps)
        stack = np.stack(maps)
        for i in range(5):
            for j in range(6):
                best, best_l = -1.0, 0
                for l in range(5):
                    if stack[l, i, j] > best:
                        best, best_l = stack[l, i, j], l
                assert got[i, j] == best_l

    def test_empty_list(self):
        with pytest.raises(EmptyList):
            label_from_differences([])

    def test_2x2_to_4x4_blocks(self):
        mask = np.array([[0, 1], [2, 3]])
        up = upsample_fullres(mask, (4, 4))
        for i in range(2):
            for j in range(2):
                assert np.all(up[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] == mask[i, j])

    def test_identity_size(self):
        mask = np.random.default_rng(0).integers(0, 4, (3, 5))
        assert np.array_equal(upsample_fullres(mask, (3, 5)), mask)

    def test_3x3_to_7x7_index_formula(self):
        src = np.arange(9).reshape(3, 3)
        up = upsample_fullres(src, (7, 7))
        for i in range(7):
            for j in range(7):
                assert up[i, j] == src[(i * 3) // 7, (j * 3) // 7]

    def test_downscale_rejected(self):
        with pytest.raises(InvalidTarget):
            upsample_fullres(np.zeros((4, 4), int), (2, 4))


class TestToyBackbone:
    def test_step_reaches_target(self):
        rng = np.random.default_rng(0)
        backbone = _toy(rng, alpha=0.5)
        z = backbone.init_latent(0, t_inv=8)
        for t in range(1, 9):
            z = backbone.step(0, z, t)
        # init is the target itself, contraction keeps it there
        assert np.allclose(z.values, backbone.targets[0])

    def test_locality_filter_noop(self):
        # difference maps are already zero outside the mask, so filtering
        # cannot change them
        backbone = _toy(np.random.default_rng(1), h=4, w=4, scale=2)
        mask = np.zeros((4, 4), dtype=np.uint8)
        mask[1:3, 1:3] = 1
        plus, minus = modulated_rollout(backbone, 0, mask, 10.0, 2, 5, 5)
        diff = difference_map(plus, minus)
        filtered = filter_difference(diff, upsample_fullres(mask, (8, 8)), 0.7)
        assert filtered.tobytes() == diff.tobytes()

    def test_mixing_matrix_applied(self):
        rng = np.random.default_rng(2)
        target = rng.standard_normal((2, 2, 4)).astype(np.float32)
        mixing = rng.standard_normal((3, 4)).astype(np.float32)
        backbone = ToyBackbone(targets=[target], scale=1, mixing=mixing)
        decoded = backbone.decode(LatentState(target, t=0))
        assert np.allclose(decoded, target @ mixing.T)

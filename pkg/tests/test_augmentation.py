"""
Tests for training distortions and evaluation attacks.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import convolve2d

from src.augmentation import (
    AugmentationError,
    apply_training_augmentation,
    convex_hull,
    derive_seed,
    eval_kernel_size,
    gaussian_blur,
    gaussian_blur_random,
    kernel_sigma,
    make_eval_attack,
    normalize_mode,
    occlude_quad,
    occlude_random_rect,
    occlude_rect,
    polygon_mask,
    replay_augmentation,
    rotate,
    rotate_random,
)
from src.models import AugmentationSpec


def textured(size=112, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)


def in_triangle(px, py, a, b, c):
    """Whether (px, py) lies in the closed triangle abc; degenerate triangles hold nothing."""
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(area) < 1e-12:
        return False
    sign = 1.0 if area > 0 else -1.0
    for (ax, ay), (bx, by) in ((a, b), (b, c), (c, a)):
        if sign * ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) < -1e-9:
            return False
    return True


def hull_raster(height, width, points):
    """Pixels whose centres lie in the hull of four points: the union of their four triangles."""
    mask = np.zeros((height, width), dtype=bool)
    triangles = [(points[i], points[j], points[k]) for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))]
    for y in range(height):
        for x in range(width):
            mask[y, x] = any(in_triangle(x + 0.5, y + 0.5, *t) for t in triangles)
    return mask


def gaussian_taps(kernel_size, sigma):
    x = np.arange(kernel_size) - (kernel_size - 1) / 2.0
    taps = np.exp(-x ** 2 / (2.0 * sigma ** 2))
    return taps / taps.sum()


def gradient_image(size=112):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    values = 40.0 + 0.9 * xx + 0.6 * yy
    return np.clip(np.stack([values, 0.8 * values, 255.0 - values], axis=-1), 0, 255).astype(np.uint8)


class TestPrimitives:
    """Test cases for forced-parameter distortions."""

    def test_derive_seed_is_xor(self):
        """Test the per-item seed rule."""
        assert derive_seed(0b1100, 0b1010) == 0b0110
        assert derive_seed(7, 0) == 7

    def test_kernel_sigma(self):
        """Test sigma tied to the kernel size."""
        assert kernel_sigma(3) == pytest.approx(0.8)
        assert kernel_sigma(21) == pytest.approx(3.5)

    def test_eval_kernel_size_is_odd(self):
        """Test ceil(6 sigma) bumped to odd."""
        assert eval_kernel_size(1.0) == 7
        assert eval_kernel_size(1.5) == 9
        assert eval_kernel_size(0.1) == 3

    def test_even_kernel_rejected(self):
        """Test blur refuses even kernels."""
        with pytest.raises(AugmentationError, match="kernel size must be odd"):
            gaussian_blur(textured(16), 4, 1.0)

    def test_blur_keeps_constant_image(self):
        """Test blurring a constant image changes nothing."""
        image = np.full((20, 20, 3), 77, np.uint8)
        assert np.array_equal(gaussian_blur(image, 7, 1.4), image)

    def test_rotate_zero_is_copy(self):
        """Test a zero rotation returns an equal copy."""
        image = textured(16)
        rotated = rotate(image, 0.0)
        assert np.array_equal(rotated, image)
        assert rotated is not image

    def test_rotate_quarter_turn(self):
        """Test a 90 degree rotation matches a counter-clockwise array rotation."""
        image = textured(17)
        rotated = rotate(image, 90.0).astype(int)
        assert np.abs(rotated - np.rot90(image).astype(int)).max() <= 1

    def test_axis_aligned_rect_area(self):
        """Test a 56x56 rectangle covers exactly a quarter of a 112x112 image."""
        image = np.zeros((112, 112, 3), np.uint8)
        painted, record = occlude_rect(image, 56.0, 56.0, 56.0, 56.0, 0.0, (255, 0, 0))
        assert record.occluded_fraction == pytest.approx(0.25)
        assert record.occlusion_kind == 'rect'
        assert painted[56, 56].tolist() == [255, 0, 0]
        assert painted[0, 0].tolist() == [0, 0, 0]

    def test_degenerate_polygon_covers_nothing(self):
        """Test collinear vertices paint no pixel."""
        mask = polygon_mask(10, 10, [(0, 0), (5, 5), (9, 9)])
        assert not mask.any()

    def test_convex_hull_drops_interior_point(self):
        """Test the hull of a triangle plus an interior point has three vertices."""
        hull = convex_hull(np.array([[0, 0], [10, 0], [0, 10], [2, 2]], dtype=np.float64))
        assert len(hull) == 3

    def test_quad_occlusion_collinear(self):
        """Test collinear quad points occlude nothing and leave an empty polygon."""
        image = textured(20)
        painted, record = occlude_quad(image, np.array([[0, 0], [5, 5], [10, 10], [15, 15]], float), (0, 0, 0))
        assert np.array_equal(painted, image)
        assert record.occluded_fraction == 0.0

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_quad_mask_matches_point_in_hull(self, seed):
        """Test the quad occluder paints exactly the pixels whose centres lie in the hull."""
        points = np.random.default_rng(seed).uniform(-4.0, 28.0, size=(4, 2))
        painted, record = occlude_quad(np.zeros((24, 24, 3), np.uint8), points, (255, 255, 255))
        expected = hull_raster(24, 24, points)
        np.testing.assert_array_equal(painted[:, :, 0] == 255, expected)
        assert record.occluded_fraction == pytest.approx(expected.mean())

    @pytest.mark.parametrize('kernel_size', [3, 9, 21])
    def test_blur_impulse_response(self, kernel_size):
        """Test blurring a unit impulse gives the sampled, normalized 2-D Gaussian."""
        sigma = kernel_sigma(kernel_size)
        impulse = np.zeros((41, 41))
        impulse[20, 20] = 1.0
        taps = gaussian_taps(kernel_size, sigma)
        expected = convolve2d(impulse, np.outer(taps, taps), mode='same')
        np.testing.assert_allclose(gaussian_blur(impulse, kernel_size, sigma), expected, atol=1e-6)

    def test_blur_matches_direct_convolution(self):
        """Test the separable blur equals a direct 2-D convolution away from the borders."""
        image = np.random.default_rng(4).uniform(0.0, 255.0, size=(48, 48))
        taps = gaussian_taps(9, kernel_sigma(9))
        expected = convolve2d(image, np.outer(taps, taps), mode='same')
        np.testing.assert_allclose(gaussian_blur(image, 9, kernel_sigma(9))[4:-4, 4:-4],
                                   expected[4:-4, 4:-4], atol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(angle=st.floats(min_value=-15.0, max_value=15.0))
    def test_rotate_back_restores_gradient(self, angle):
        """Test rotating by an angle and back leaves a smooth gradient nearly unchanged."""
        image = gradient_image()
        restored = rotate(rotate(image, angle), -angle)
        yy, xx = np.mgrid[0:112, 0:112]
        inner = (xx - 55.5) ** 2 + (yy - 55.5) ** 2 <= 50.0 ** 2
        diff = np.abs(restored.astype(float) - image.astype(float))[inner]
        assert diff.mean() < 3.0

    def test_normalize_mode(self):
        """Test short and long mode names."""
        assert normalize_mode('bro') == 'bro'
        assert normalize_mode('blur') == 'blur_only'
        with pytest.raises(AugmentationError, match="Unknown augmentation mode"):
            normalize_mode('sharpen')


class TestTrainingDistortions:
    """Test cases for the seeded training distortions."""

    def setup_method(self):
        self.spec = AugmentationSpec()
        self.image = textured()

    def test_rotation_needs_square_crop(self):
        """Test rotation refuses non-square crops."""
        with pytest.raises(AugmentationError, match="square crop"):
            rotate_random(np.zeros((10, 12, 3), np.uint8), self.spec, np.random.default_rng(0))

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_rotation_within_range(self, seed):
        """Test sampled angles stay inside [-15, 15]."""
        _, record = rotate_random(textured(16), self.spec, np.random.default_rng(seed))
        assert -15.0 <= record.rotation_angle <= 15.0

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_kernel_within_range(self, seed):
        """Test sampled kernels are odd sizes between 3 and 21."""
        _, record = gaussian_blur_random(textured(24), self.spec, np.random.default_rng(seed))
        assert record.kernel_size in range(3, 22, 2)
        assert record.blur_sigma == pytest.approx(kernel_sigma(record.kernel_size))

    def test_occlusion_area_bound(self):
        """Test painted fractions never exceed the bound plus rasterization slack."""
        image = np.zeros((112, 112, 3), np.uint8)
        fractions = []
        for seed in range(1000):
            _, record = occlude_random_rect(image, self.spec, np.random.default_rng(seed))
            fractions.append(record.occluded_fraction)
        assert max(fractions) <= 0.27
        assert min(fractions) >= 0.0

    def test_deterministic_for_seed(self):
        """Test equal seeds give identical outputs and records."""
        first = apply_training_augmentation(self.image, self.spec, 'bro', 42)
        second = apply_training_augmentation(self.image, self.spec, 'bro', 42)
        assert np.array_equal(first[0], second[0])
        assert first[1] == second[1]
        assert first[1].seed == 42

    def test_single_mode_applies_one_distortion(self):
        """Test blur-only mode never rotates or occludes."""
        spec = self.spec.with_probability(1.0)
        for seed in range(20):
            _, record = apply_training_augmentation(self.image, spec, 'blur', seed)
            assert record.kernel_size > 0
            assert record.rotation_angle == 0.0
            assert record.occlusion_kind == ''

    def test_bro_with_certain_probabilities(self):
        """Test bro applies all three distortions when every probability is 1."""
        _, record = apply_training_augmentation(self.image, self.spec.with_probability(1.0), 'bro', 3)
        assert record.rotation_angle != 0.0
        assert record.kernel_size >= 3
        assert record.occlusion_kind == 'rect'
        assert record.within(self.spec)

    def test_zero_probability_is_identity(self):
        """Test nothing is applied when every probability is 0."""
        output, record = apply_training_augmentation(self.image, self.spec.with_probability(0.0), 'bro', 3)
        assert np.array_equal(output, self.image)
        assert record.is_identity

    def test_disabled_distortion_skipped(self):
        """Test a disabled distortion is never applied in bro mode."""
        spec = AugmentationSpec(enable_blur=False).with_probability(1.0)
        _, record = apply_training_augmentation(self.image, spec, 'bro', 5)
        assert record.kernel_size == 0

    def test_replay_reproduces_pixels(self):
        """Test replaying a record rebuilds the augmented crop exactly."""
        spec = self.spec.with_probability(1.0)
        for seed in range(5):
            output, record = apply_training_augmentation(self.image, spec, 'bro', seed)
            assert np.array_equal(replay_augmentation(self.image, record), output)

    def test_input_not_modified(self):
        """Test the source crop is left untouched."""
        before = self.image.copy()
        apply_training_augmentation(self.image, self.spec.with_probability(1.0), 'bro', 1)
        assert np.array_equal(before, self.image)


class TestEvalAttacks:
    """Test cases for evaluation attacks."""

    def setup_method(self):
        self.image = textured()

    def test_none_is_identity(self):
        """Test the 'none' attack returns an unchanged copy."""
        output, record = make_eval_attack(self.image, 'none', 1)
        assert np.array_equal(output, self.image)
        assert record.is_identity

    def test_blur_sigma_range(self):
        """Test attack sigmas lie in [1, 5] with kernel ceil(6 sigma) made odd."""
        for seed in range(50):
            _, record = make_eval_attack(self.image, 'blur', seed)
            assert 1.0 <= record.blur_sigma <= 5.0
            assert record.kernel_size == eval_kernel_size(record.blur_sigma)

    def test_occlusion_is_quad(self):
        """Test occlusion attacks paint a convex hull of up to four points."""
        _, record = make_eval_attack(self.image, 'occlusion', 9)
        assert record.occlusion_kind == 'quad'
        assert 3 <= len(record.occlusion_polygon) <= 4

    def test_blur_occ_combines(self):
        """Test the combined attack records both distortions."""
        _, record = make_eval_attack(self.image, 'blur_occ', 2)
        assert record.kernel_size >= 3
        assert record.occlusion_kind == 'quad'

    def test_unknown_attack(self):
        """Test unknown attacks are rejected."""
        with pytest.raises(AugmentationError, match="Unknown attack"):
            make_eval_attack(self.image, 'rain', 0)

    def test_deterministic(self):
        """Test equal seeds give identical attacked faces."""
        a = make_eval_attack(self.image, 'blur_occ', 11)
        b = make_eval_attack(self.image, 'blur_occ', 11)
        assert np.array_equal(a[0], b[0])
        assert a[1] == b[1]

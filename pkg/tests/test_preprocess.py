import numpy as np
import pytest

from helpers import otsu_exhaustive
from rasmkit.image import to_gray
from rasmkit.preprocess import (
    BlankImageError,
    PreprocessConfig,
    binarize,
    deslant,
    dilate2x2,
    estimate_slant,
    median3x3,
    morph,
    otsu_threshold,
    resize_normalize,
    shear,
)


class TestOtsu:
    def test_two_level_image(self):
        img = np.array([0] * 50 + [255] * 50, np.uint8).reshape(10, 10)
        assert otsu_threshold(img) == 0.0  # smallest maximizing k

    def test_constant_image(self):
        assert otsu_threshold(np.full((6, 6), 128, np.uint8)) == 128 / 255

    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(99)
        for _ in range(60):
            img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
            assert otsu_threshold(img) == otsu_exhaustive(img)

    def test_bimodal(self):
        rng = np.random.default_rng(5)
        img = np.where(rng.random((32, 32)) < 0.3,
                       rng.integers(10, 40, (32, 32)),
                       rng.integers(180, 230, (32, 32))).astype(np.uint8)
        assert otsu_threshold(img) == otsu_exhaustive(img)


class TestBinarize:
    def _glyph(self, invert=False):
        img = np.full((20, 20), 230, np.uint8)
        img[5:9, 5:15] = 20  # 40 dark pixels = 10%
        return (255 - img).astype(np.uint8) if invert else img

    def test_dark_glyph_on_light_ground(self):
        b = binarize(self._glyph())
        assert b.sum() == 40
        assert b[6, 6] == 1

    def test_polarity_symmetry(self):
        assert np.array_equal(binarize(self._glyph()), binarize(self._glyph(invert=True)))

    def test_constant_image_all_background(self):
        assert binarize(np.full((8, 8), 100, np.uint8)).sum() == 0

    def test_idempotent_in_effect(self):
        rng = np.random.default_rng(11)
        img = rng.integers(0, 256, (24, 24)).astype(np.uint8)
        once = binarize(img)
        assert np.array_equal(binarize(to_gray(once)), once)


class TestSlant:
    def _vbar(self, h=41, w=41):
        bar = np.zeros((h, w), np.uint8)
        bar[3 : h - 3, w // 2] = 1
        return bar

    def test_vertical_bar_no_slant(self):
        assert estimate_slant(self._vbar()) == 0.0

    def test_single_row_degenerate(self):
        row = np.zeros((5, 9), np.uint8)
        row[2, 1:8] = 1
        assert estimate_slant(row) == 0.0

    def test_blank_raises(self):
        with pytest.raises(BlankImageError, match="blank image"):
            estimate_slant(np.zeros((4, 4), np.uint8))

    def test_known_shear_recovered(self):
        sheared = shear(self._vbar(), 15.0)
        assert abs(estimate_slant(sheared) - 15.0) <= 1.0

    def test_clamp(self):
        steep = shear(self._vbar(101, 201), 55.0)
        assert estimate_slant(steep, clamp_deg=45.0) == 45.0

    def test_correction_leaves_no_slant(self):
        for angle in (-30.0, -10.0, 8.0, 25.0):
            sheared = shear(self._vbar(), angle)
            corrected = deslant(sheared)
            assert abs(estimate_slant(corrected)) <= 2.0


class TestShear:
    def test_zero_angle_identity(self):
        rng = np.random.default_rng(2)
        b = (rng.random((15, 10)) < 0.3).astype(np.uint8)
        assert np.array_equal(shear(b, 0.0), b)

    def test_center_row_pixel_fixed(self):
        b = np.zeros((11, 11), np.uint8)
        b[5, 7] = 1  # row 5 is the vertical center of an 11-row image
        out = shear(b, 30.0)
        assert out[5, 7] == 1 and out.sum() == 1

    def test_angle_limit(self):
        with pytest.raises(ValueError):
            shear(np.ones((2, 2), np.uint8), 61.0)

    def test_near_inverse(self):
        # Centered bar with wide margins: canvas never grows, so the only
        # differences come from per-row rounding.
        b = np.zeros((41, 61), np.uint8)
        b[4:37, 28:33] = 1
        back = shear(shear(b, 12.0), -12.0)
        assert back.shape == b.shape
        diff = int(np.sum(back != b))
        assert diff <= 0.05 * int(b.sum())

    def test_canvas_holds_all_pixels(self):
        b = np.zeros((21, 5), np.uint8)
        b[:, 2] = 1
        out = shear(b, 40.0)
        assert out.sum() == b.sum()  # pixel count preserved (one per row here)


class TestResize:
    def test_identity_when_full_extent(self):
        rng = np.random.default_rng(4)
        cfg = PreprocessConfig(norm_size=60)
        b = (rng.random((60, 60)) < 0.5).astype(np.uint8)
        b[0, 0] = b[-1, -1] = 1  # force full-extent bounding box
        assert np.array_equal(resize_normalize(b, cfg), b)

    def test_single_pixel_fills_grid(self):
        cfg = PreprocessConfig(norm_size=60)
        b = np.zeros((9, 9), np.uint8)
        b[4, 4] = 1
        assert resize_normalize(b, cfg).sum() == 3600

    def test_checkerboard_blocks(self):
        cfg = PreprocessConfig(norm_size=8)
        board = np.array([[1, 0], [0, 1]], np.uint8)
        out = resize_normalize(board, cfg)
        expected = np.kron(board, np.ones((4, 4), np.uint8))
        assert np.array_equal(out, expected)

    def test_blank_raises(self):
        with pytest.raises(BlankImageError):
            resize_normalize(np.zeros((5, 5), np.uint8))

    def test_crops_before_mapping(self):
        cfg = PreprocessConfig(norm_size=10)
        b = np.zeros((30, 30), np.uint8)
        b[10:20, 10:20] = 1
        assert resize_normalize(b, cfg).sum() == 100


class TestMedian:
    def test_noisy_center_patch(self):
        patch = np.array([[25, 30, 35], [30, 100, 40], [35, 40, 45]], np.uint8)
        out = median3x3(patch)
        assert out[1, 1] == 35

    def test_constant_unchanged(self):
        img = np.full((7, 7), 42, np.uint8)
        assert np.array_equal(median3x3(img, passes=3), img)

    def test_against_sort_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            img = rng.integers(0, 256, (7, 7)).astype(np.uint8)
            out = median3x3(img)
            padded = np.pad(img, 1, mode="edge")
            for r in range(7):
                for c in range(7):
                    window = sorted(padded[r : r + 3, c : c + 3].ravel().tolist())
                    assert out[r, c] == window[4]

    def test_multiple_passes(self):
        rng = np.random.default_rng(8)
        img = rng.integers(0, 256, (10, 10)).astype(np.uint8)
        assert np.array_equal(median3x3(img, 2), median3x3(median3x3(img, 1), 1))


class TestMorph:
    def test_fill_interior_hole(self):
        b = np.ones((3, 3), np.uint8)
        b[1, 1] = 0
        assert morph(b, "fill")[1, 1] == 1

    def test_fill_respects_threshold(self):
        b = np.ones((3, 3), np.uint8)
        b[1, 1] = 0
        b[0, 0] = 0  # only 7 foreground neighbours left
        assert morph(b, "fill", PreprocessConfig(fill_threshold=7))[1, 1] == 1
        assert morph(b, "fill", PreprocessConfig(fill_threshold=8))[1, 1] == 0

    def test_clean_isolated_pixel(self):
        b = np.zeros((5, 5), np.uint8)
        b[2, 2] = 1
        assert morph(b, "clean").sum() == 0

    def test_diagonal_pair_remove_vs_clean(self):
        b = np.zeros((4, 4), np.uint8)
        b[1, 1] = b[2, 2] = 1  # only diagonal adjacency
        assert morph(b, "clean").sum() == 2  # 8-neighbour exists
        assert morph(b, "remove").sum() == 0  # no 4-neighbour

    def test_clean_is_idempotent_after_one_pass(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            b = (rng.random((12, 12)) < 0.25).astype(np.uint8)
            once = morph(b, "clean")
            assert np.array_equal(morph(once, "clean"), once)

    def test_synchronous_semantics(self):
        # Two isolated pixels two apart: a sequential pass could see the
        # first removal and then spare/remove differently; both must go.
        b = np.zeros((3, 5), np.uint8)
        b[1, 1] = b[1, 3] = 1
        assert morph(b, "clean").sum() == 0


class TestDilate:
    def test_corner_pixel_hit_set(self):
        b = np.zeros((3, 3), np.uint8)
        b[0, 0] = 1
        out = dilate2x2(b)
        assert set(zip(*np.nonzero(out))) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_empty_stays_empty(self):
        assert dilate2x2(np.zeros((4, 4), np.uint8)).sum() == 0

    def test_extensive_and_monotone(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            a = (rng.random((10, 10)) < 0.3).astype(np.uint8)
            extra = (rng.random((10, 10)) < 0.1).astype(np.uint8)
            bigger = (a | extra).astype(np.uint8)
            da, dbigger = dilate2x2(a), dilate2x2(bigger)
            assert not np.any(a > da)  # extensive
            assert not np.any(da > dbigger)  # monotone

    def test_same_canvas(self):
        b = np.ones((5, 7), np.uint8)
        assert dilate2x2(b).shape == (5, 7)


class TestPreprocessorEstimator:
    def test_transform_returns_normalized_binaries(self):
        from rasmkit.preprocess import CharacterPreprocessor
        from rasmkit.synth import render_sample

        imgs = [render_sample("ring", np.random.default_rng([9, 0, i])) for i in range(2)]
        pre = CharacterPreprocessor(norm_size=60)
        out = pre.fit_transform(imgs)
        assert len(out) == 2
        for norm in out:
            assert norm.shape == (60, 60)
            assert set(np.unique(norm)) <= {0, 1}

    def test_get_params_round_trip(self):
        from sklearn.base import clone

        from rasmkit.preprocess import CharacterPreprocessor

        pre = CharacterPreprocessor(norm_size=90, median_passes=2)
        assert clone(pre).get_params() == pre.get_params()

    def test_invalid_params_caught_at_fit(self):
        from rasmkit.preprocess import CharacterPreprocessor

        with pytest.raises(ValueError):
            CharacterPreprocessor(norm_size=7).fit([])


class TestStages:
    def test_stage_order_and_shapes(self):
        from rasmkit.preprocess import preprocess_stages
        from rasmkit.synth import render_sample

        img = render_sample("tee", np.random.default_rng([3, 0, 0]))
        stages = preprocess_stages(img, PreprocessConfig())
        assert list(stages) == ["gray", "median", "binary", "clean", "remove",
                                "fill", "deslant", "normalized"]
        assert stages["normalized"].shape == (60, 60)

    def test_dilate_stage_optional(self):
        from rasmkit.preprocess import preprocess_stages
        from rasmkit.synth import render_sample

        img = render_sample("tee", np.random.default_rng([3, 0, 1]))
        stages = preprocess_stages(img, PreprocessConfig(dilate=True))
        assert "dilate" in stages


class TestConfig:
    def test_invariants(self):
        with pytest.raises(ValueError):
            PreprocessConfig(norm_size=7)
        with pytest.raises(ValueError):
            PreprocessConfig(norm_size=10, fill_threshold=3)
        with pytest.raises(ValueError):
            PreprocessConfig(median_passes=0)

    def test_text_round_trip(self):
        cfg = PreprocessConfig(norm_size=90, median_passes=2, fill_threshold=8,
                               slant_clamp_deg=30.0, dilate=True)
        assert PreprocessConfig.from_text(cfg.to_text()) == cfg

    def test_text_rejects_unknown_key(self):
        with pytest.raises(ValueError, match="unknown key"):
            PreprocessConfig.from_text("wat=1\n")

"""Unit tests for domain types, range conversion, label operations and raster I/O."""

import numpy as np
import pytest

from src.core.errors import InvalidImageError
from src.core.io import load_image, load_labels, save_image, save_labels, to_uint8
from src.core.labels import nearest_indices, one_hot, resize_labels_nearest
from src.core.ranges import from_model_range, to_model_range
from src.core.types import CoarseImage, Image, ModelRangeImage, SegmentationMap


class TestImageTypes:
    """Test raster validation."""

    def test_image_rejects_out_of_range(self):
        """Values outside [0, 1] are rejected."""
        with pytest.raises(InvalidImageError):
            Image(np.full((4, 4, 3), 1.5))
        with pytest.raises(InvalidImageError):
            Image(np.full((4, 4, 3), -0.1))

    def test_image_rejects_bad_shape_and_nan(self):
        with pytest.raises(InvalidImageError):
            Image(np.zeros((4, 4)))
        with pytest.raises(InvalidImageError):
            Image(np.zeros((0, 4, 3)))
        pixels = np.zeros((4, 4, 3))
        pixels[0, 0, 0] = np.nan
        with pytest.raises(InvalidImageError):
            Image(pixels)

    def test_image_is_immutable_copy(self):
        """The constructor copies; later edits of the source do not leak in."""
        source = np.zeros((4, 4, 3))
        img = Image(source)
        source[0, 0, 0] = 1.0
        assert img.pixels[0, 0, 0] == 0.0
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 1.0

    def test_require_divisible(self):
        img = Image(np.zeros((8, 12, 3)))
        assert img.require_divisible(4) is img
        with pytest.raises(InvalidImageError):
            img.require_divisible(8)

    def test_equality_is_per_type(self):
        pixels = np.full((2, 2, 3), 0.5)
        assert Image(pixels) == Image(pixels)
        assert Image(pixels) != CoarseImage(pixels)

    def test_model_range_bounds(self):
        ModelRangeImage(np.full((2, 2, 3), -1.0))
        with pytest.raises(InvalidImageError):
            ModelRangeImage(np.full((2, 2, 3), 1.01))


class TestSegmentationMap:
    """Test label map validation."""

    def test_labels_must_be_below_n_classes(self):
        with pytest.raises(InvalidImageError):
            SegmentationMap(np.array([[0, 3]]), 3)

    def test_labels_must_be_integer(self):
        with pytest.raises(InvalidImageError):
            SegmentationMap(np.array([[0.0, 1.0]]), 3)

    def test_n_classes_range(self):
        with pytest.raises(InvalidImageError):
            SegmentationMap(np.zeros((2, 2), dtype=np.int64), 0)
        with pytest.raises(InvalidImageError):
            SegmentationMap(np.zeros((2, 2), dtype=np.int64), 256)

    def test_present_labels(self):
        s = SegmentationMap(np.array([[2, 0], [2, 2]]), 4)
        assert s.present_labels().tolist() == [0, 2]
        assert s.labels.dtype == np.uint8


class TestRanges:
    """Test [0, 1] <-> [-1, 1] conversion."""

    def test_endpoints(self):
        assert np.all(to_model_range(Image(np.zeros((2, 2, 3)))).pixels == -1.0)
        assert np.all(to_model_range(Image(np.ones((2, 2, 3)))).pixels == 1.0)
        assert np.all(from_model_range(np.full((2, 2, 3), -1.0)).pixels == 0.0)
        assert np.all(from_model_range(np.full((2, 2, 3), 1.0)).pixels == 1.0)

    def test_overshoot_is_clipped(self):
        """Sampler overshoot above 1 maps to 1.0."""
        assert np.all(from_model_range(np.full((2, 2, 3), 1.2)).pixels == 1.0)

    def test_round_trip(self, sample):
        x, _ = sample
        np.testing.assert_allclose(from_model_range(to_model_range(x)).pixels, x.pixels, atol=1e-12)

    def test_raw_array_out_of_range(self):
        with pytest.raises(InvalidImageError):
            to_model_range(np.full((2, 2, 3), 2.0))


class TestLabels:
    """Test one-hot expansion and nearest resizing."""

    def test_one_hot_planes(self):
        s = SegmentationMap(np.array([[0, 1], [2, 1]]), 3)
        planes = one_hot(s).planes
        assert planes.shape == (3, 2, 2)
        assert planes[1].tolist() == [[0, 1], [0, 1]]
        assert np.all(planes.sum(axis=0) == 1)

    def test_one_hot_absent_class_is_empty(self):
        s = SegmentationMap(np.zeros((3, 3), dtype=np.int64), 4)
        assert one_hot(s).planes[3].sum() == 0

    def test_one_hot_argmax_recovers_map(self, rng):
        for _ in range(200):
            n_c = int(rng.integers(1, 20))
            h, w = (int(v) for v in rng.integers(1, 12, size=2))
            s = SegmentationMap(rng.integers(0, n_c, size=(h, w)), n_c)
            planes = one_hot(s).planes
            assert planes.shape == (n_c, h, w)
            np.testing.assert_array_equal(planes.argmax(axis=0), s.labels)

    def test_checkerboard_downsize_matches_brute_force(self):
        board = SegmentationMap(np.indices((4, 4)).sum(axis=0) % 2, 2)
        r = resize_labels_nearest(board, 2, 2)

        expected = [[int(board.labels[i * 4 // 2, j * 4 // 2]) for j in range(2)] for i in range(2)]
        assert r.labels.tolist() == expected == [[0, 0], [0, 0]]

    def test_nearest_indices(self):
        assert nearest_indices(4, 8).tolist() == [0, 0, 1, 1, 2, 2, 3, 3]
        assert nearest_indices(8, 4).tolist() == [0, 2, 4, 6]

    def test_resize_never_invents_labels(self, random_map):
        s = random_map(10, 14, 5)
        r = resize_labels_nearest(s, 5, 7)
        assert r.size == (5, 7)
        assert set(r.present_labels().tolist()) <= set(s.present_labels().tolist())

    def test_resize_same_size_is_identity(self, random_map):
        s = random_map(4, 4, 3)
        assert resize_labels_nearest(s, 4, 4) is s


class TestRasterIO:
    """Test PNG round trips."""

    def test_image_round_trip_is_8bit_exact(self, tmp_path, sample):
        x, _ = sample
        path = save_image(x, tmp_path / "x.png")
        loaded = load_image(path)
        np.testing.assert_array_equal(to_uint8(loaded.pixels), to_uint8(x.pixels))

    def test_labels_round_trip(self, tmp_path, sample):
        _, s = sample
        path = save_labels(s, tmp_path / "s.png")
        assert load_labels(path, s.n_classes) == s

    def test_load_image_checks_factor(self, tmp_path):
        path = save_image(Image(np.zeros((6, 8, 3))), tmp_path / "odd.png")
        with pytest.raises(InvalidImageError):
            load_image(path, factor=4)

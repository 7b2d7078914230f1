import numpy as np
import pytest
from PIL import Image

from lowlight import (UnsupportedImageError, gamma_darken, load_image,
                      resize_bilinear, save_image)


class TestLoadImage:
    def test_all_white_png(self, tmp_path):
        path = tmp_path / "white.png"
        Image.new("RGB", (2, 2), (255, 255, 255)).save(path)
        img = load_image(path)
        assert img.shape == (3, 2, 2)
        assert np.all(img == 1.0)

    def test_all_black_png(self, tmp_path):
        path = tmp_path / "black.png"
        Image.new("RGB", (2, 2), (0, 0, 0)).save(path)
        assert np.all(load_image(path) == 0.0)

    def test_midgray_normalization(self, tmp_path):
        path = tmp_path / "gray.png"
        Image.new("RGB", (1, 1), (128, 128, 128)).save(path)
        assert load_image(path) == pytest.approx(128 / 255)

    def test_channel_order_is_rgb(self, tmp_path):
        path = tmp_path / "red.png"
        Image.new("RGB", (1, 1), (255, 0, 0)).save(path)
        img = load_image(path)
        assert img[0, 0, 0] == 1.0 and img[1, 0, 0] == 0.0 and img[2, 0, 0] == 0.0

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_image(tmp_path / "nope.png")

    def test_16bit_grayscale_rejected(self, tmp_path):
        path = tmp_path / "deep.png"
        Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(path)
        with pytest.raises(UnsupportedImageError, match="mode"):
            load_image(path)

    def test_cmyk_rejected(self, tmp_path):
        path = tmp_path / "cmyk.jpg"
        Image.new("CMYK", (4, 4)).save(path)
        with pytest.raises(UnsupportedImageError, match="CMYK"):
            load_image(path)

    def test_grayscale_rejected(self, tmp_path):
        path = tmp_path / "gray8.png"
        Image.new("L", (4, 4), 7).save(path)
        with pytest.raises(UnsupportedImageError, match="'L'"):
            load_image(path)


class TestSaveImage:
    def test_black_and_white_round(self, tmp_path):
        save_image(np.zeros((3, 2, 2), np.float32), tmp_path / "b.png")
        save_image(np.ones((3, 2, 2), np.float32), tmp_path / "w.png")
        assert np.all(load_image(tmp_path / "b.png") == 0.0)
        assert np.all(load_image(tmp_path / "w.png") == 1.0)

    def test_round_trip_quantization_bound(self, tmp_path, rng):
        img = rng.uniform(0, 1, (3, 17, 23)).astype(np.float32)
        path = tmp_path / "rt.png"
        save_image(img, path)
        back = load_image(path)
        assert np.abs(back - img).max() <= 1 / 510 + 1e-9

    def test_rejects_out_of_range(self, tmp_path):
        bad = np.full((3, 2, 2), 1.5, np.float32)
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            save_image(bad, tmp_path / "bad.png")

    def test_unwritable_path_is_io_error(self, tmp_path):
        img = np.zeros((3, 2, 2), np.float32)
        target = tmp_path / "not_a_dir"
        target.write_text("file, not dir")
        with pytest.raises(OSError):
            save_image(img, target / "x.png")


class TestResizeBilinear:
    def test_constant_maps_to_constant(self):
        img = np.full((3, 5, 7), 0.5, np.float32)
        out = resize_bilinear(img, 9, 13)
        assert out.shape == (3, 9, 13)
        assert np.allclose(out, 0.5, atol=1e-7)

    def test_identity_resize(self, rng):
        img = rng.uniform(0, 1, (3, 6, 6)).astype(np.float32)
        assert np.array_equal(resize_bilinear(img, 6, 6), img)

    def test_align_corners_row(self):
        # 1x2 row [0, 1] -> 1x3 must hit the half point exactly
        img = np.array([[[0.0, 1.0]]], dtype=np.float32)
        out = resize_bilinear(img, 1, 3)
        assert out == pytest.approx([[[0.0, 0.5, 1.0]]], abs=1e-7)

    def test_range_preserved(self, rng):
        img = rng.uniform(0.2, 0.8, (3, 11, 13)).astype(np.float64)
        out = resize_bilinear(img, 23, 5)
        assert out.min() >= img.min() - 1e-6
        assert out.max() <= img.max() + 1e-6

    def test_rejects_nonpositive_target(self, rng):
        img = rng.uniform(0, 1, (3, 4, 4)).astype(np.float32)
        with pytest.raises(ValueError):
            resize_bilinear(img, 0, 4)


class TestGammaDarken:
    def test_gamma_one_is_identity(self, rng):
        img = rng.uniform(0, 1, (3, 8, 8)).astype(np.float32)
        assert np.allclose(gamma_darken(img, 1.0), img)

    def test_one_is_fixed_point(self):
        img = np.ones((3, 2, 2), np.float32)
        for g in (0.5, 2.0, 7.3):
            assert np.all(gamma_darken(img, g) == 1.0)

    def test_power_value(self):
        img = np.full((3, 1, 1), 0.25, np.float64)
        assert gamma_darken(img, 2.0) == pytest.approx(0.0625, abs=1e-12)

    def test_monotone_per_element(self, rng):
        v = np.sort(rng.uniform(0, 1, 1000))
        out = gamma_darken(v.reshape(1, 1, -1).repeat(3, axis=0), 2.7)
        assert np.all(np.diff(out[0, 0]) >= 0)

    def test_composition(self, rng):
        img = rng.uniform(0, 1, (3, 8, 8))
        a, b = 1.7, 2.2
        lhs = gamma_darken(gamma_darken(img, a), b)
        rhs = gamma_darken(img, a * b)
        assert np.abs(lhs - rhs).max() <= 1e-6

    def test_rejects_nonpositive_gamma(self, rng):
        img = rng.uniform(0, 1, (3, 4, 4))
        with pytest.raises(ValueError):
            gamma_darken(img, 0.0)
        with pytest.raises(ValueError):
            gamma_darken(img, -1.0)

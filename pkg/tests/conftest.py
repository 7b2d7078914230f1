import numpy as np
import pytest

from lowlight import save_image


def smooth_image(rng, size=64, base_range=(0.35, 0.75)):
    """Random smooth multi-frequency image with mid-range brightness.

    Used as synthetic 'well lit' ground truth; gamma darkening then gives
    a dark input with a known reference.
    """
    base = rng.uniform(*base_range)
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((3, size, size), np.float32)
    for c in range(3):
        v = (
            base
            + 0.2 * np.sin(2 * np.pi * (rng.uniform(0.5, 2) * xx + rng.uniform()))
            + 0.15 * np.cos(2 * np.pi * (rng.uniform(0.5, 2) * yy + rng.uniform()))
            + rng.normal(0, 0.02, (size, size))
        )
        img[c] = np.clip(v, 0.02, 0.98)
    return img


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def image_dir(tmp_path, rng):
    """Directory of five small random PNG images."""
    d = tmp_path / "imgs"
    d.mkdir()
    for i in range(5):
        img = rng.uniform(0, 1, (3, 24, 32)).astype(np.float32)
        save_image(img, d / f"img_{i}.png")
    return d

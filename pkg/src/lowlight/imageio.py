"""Image decode/encode, bilinear resizing, and gamma darkening.

Pixels map linearly between 8-bit bytes and [0, 1] floats; no color-space
conversion is applied anywhere in the package.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .errors import UnsupportedImageError
from .validation import check_image

__all__ = ["load_image", "save_image", "resize_bilinear", "gamma_darken"]


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load an 8-bit RGB PNG/JPEG as a float32 (3, H, W) array in [0, 1].

    Unreadable files raise OSError; files that decode to anything other
    than 8-bit RGB (16-bit, palette, grayscale, CMYK, ...) raise
    UnsupportedImageError naming the offending mode.
    """
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise UnsupportedImageError(
                f"{path}: unsupported image mode {im.mode!r}, expected 8-bit RGB"
            )
        arr = np.asarray(im, dtype=np.uint8)
    return arr.transpose(2, 0, 1).astype(np.float32) / 255.0


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (3, H, W) [0, 1] array as an 8-bit RGB file.

    Values are quantized with round(v * 255), so a load/save round trip
    moves each element by at most 1/510.
    """
    arr = check_image(img, name="img")
    data = np.rint(np.asarray(arr, dtype=np.float64) * 255.0)
    data = np.clip(data, 0, 255).astype(np.uint8).transpose(1, 2, 0)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data, mode="RGB").save(path)


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinearly resize a (C, H, W) array to (C, height, width).

    Uses the align-corners convention: corner pixels of input and output
    coincide, so a 1x2 row [0, 1] resized to 1x3 gives [0, 0.5, 1].
    """
    if height < 1 or width < 1:
        raise ValueError(f"target size must be positive, got {height}x{width}")
    arr = np.asarray(img)
    if arr.ndim != 3:
        raise ValueError(f"expected (C, H, W) input, got shape {arr.shape}")
    if arr.shape[1:] == (height, width):
        return arr.copy()
    dtype = arr.dtype if np.issubdtype(arr.dtype, np.floating) else np.float32
    t = torch.from_numpy(np.ascontiguousarray(arr, dtype=dtype))[None]
    out = F.interpolate(t, size=(height, width), mode="bilinear", align_corners=True)
    return out[0].numpy()


def gamma_darken(img: np.ndarray, gamma: float) -> np.ndarray:
    """Apply v -> v**gamma element-wise; gamma > 1 darkens, gamma < 1 brightens."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    arr = np.asarray(img)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return np.power(arr, arr.dtype.type(gamma))

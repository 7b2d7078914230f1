"""Input validation helpers for image arrays.

All user-facing images are channel-first float arrays of shape (3, H, W)
with finite values in [0, 1]. Batches stack them along a leading axis.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_image(img: np.ndarray, *, name: str = "image") -> np.ndarray:
    """Validate a single (3, H, W) image in [0, 1] and return it as float32+.

    Raises ValueError describing the first violated property.
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"{name} must have shape (3, H, W), got {arr.shape}")
    if arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"{name} has empty spatial dimensions: {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"{name} values must lie in [0, 1], got range "
            f"[{arr.min():.6g}, {arr.max():.6g}]"
        )
    return arr


def check_batch(X, *, name: str = "X") -> np.ndarray:
    """Validate a batch of images given as a (N, 3, H, W) array or a sequence
    of equally sized (3, H, W) arrays. Returns a float (N, 3, H, W) array.
    """
    if isinstance(X, np.ndarray) and X.ndim == 4:
        if X.shape[0] < 1:
            raise ValueError(f"{name} must contain at least one image")
        return np.stack([check_image(x, name=f"{name}[{i}]") for i, x in enumerate(X)])
    if isinstance(X, np.ndarray) and X.ndim == 3:
        return check_image(X, name=name)[None]
    if isinstance(X, Sequence) and not isinstance(X, (str, bytes)):
        if len(X) == 0:
            raise ValueError(f"{name} must contain at least one image")
        imgs = [check_image(x, name=f"{name}[{i}]") for i, x in enumerate(X)]
        shapes = {a.shape for a in imgs}
        if len(shapes) != 1:
            raise ValueError(f"{name} images must share one shape, got {sorted(shapes)}")
        return np.stack(imgs)
    raise ValueError(
        f"{name} must be a (N, 3, H, W) array, a (3, H, W) array, or a "
        f"sequence of (3, H, W) arrays, got {type(X).__name__}"
    )


def check_same_shape(a: np.ndarray, b: np.ndarray, *, names=("a", "b")) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{names[0]} and {names[1]} shapes differ: {a.shape} vs {b.shape}")

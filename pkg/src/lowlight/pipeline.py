"""Inference helpers shared by the CLI and the estimator."""

from __future__ import annotations

import numpy as np
import torch

from .curve import CurveConfig, apply_curve
from .factor import FactorNet
from .imageio import resize_bilinear
from .validation import check_image

__all__ = ["estimate_factor", "enhance_image", "factor_to_image"]


def estimate_factor(net: FactorNet, img: np.ndarray,
                    downsample: int | None = None) -> np.ndarray:
    """Factor map for one (3, H, W) image.

    With downsample d > 1 the map is estimated on a d-times-smaller copy
    and bilinearly upsampled back: the map is smooth, so this trades a
    little fidelity for a large speedup on big frames.
    """
    img = check_image(img)
    h, w = img.shape[1:]
    if downsample is not None and downsample > 1:
        small = resize_bilinear(img, max(1, h // downsample), max(1, w // downsample))
        with torch.no_grad():
            factor_small = net(torch.from_numpy(small)).numpy()
        return resize_bilinear(factor_small, h, w)
    with torch.no_grad():
        return net(torch.from_numpy(img)).numpy()


def enhance_image(net: FactorNet, img: np.ndarray,
                  curve: CurveConfig = CurveConfig(),
                  downsample: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Enhance one (3, H, W) image; returns (enhanced, factor)."""
    factor = estimate_factor(net, img, downsample)
    enhanced = apply_curve(check_image(img), factor, curve)
    return enhanced, factor


def factor_to_image(factor: np.ndarray) -> np.ndarray:
    """Shift a (-1, 1) factor map to a [0, 1] image ((r + 1) / 2) for
    visual inspection: darker pixels mean stronger brightening demand."""
    return (np.asarray(factor, dtype=np.float32) + 1.0) / 2.0

"""Full-reference quality metrics on [0, 1] images: MSE, PSNR, SSIM."""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import DegenerateInputError
from .validation import check_same_shape

__all__ = ["mse", "psnr", "ssim", "mean_brightness", "PSNR_CAP"]

PSNR_CAP = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared element difference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, names=("a", "b"))
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 * log10(1 / mse) with data range 1, capped at 100 dB.

    Identical inputs (mse 0) return the cap rather than infinity so that
    aggregated tables stay finite.
    """
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(1.0 / err)))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    # Gaussian-weighted local statistics over valid window positions
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = convolve2d(x, w, mode="valid")
    mu_y = convolve2d(y, w, mode="valid")
    xx = convolve2d(x * x, w, mode="valid") - mu_x**2
    yy = convolve2d(y * y, w, mode="valid") - mu_y**2
    xy = convolve2d(x * y, w, mode="valid") - mu_x * mu_y
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity, 11x11 Gaussian window (sigma 1.5),
    K1 = 0.01, K2 = 0.03, data range 1, computed per channel and averaged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, names=("a", "b"))
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.ndim != 3:
        raise ValueError(f"expected (C, H, W) or (H, W) inputs, got shape {a.shape}")
    if min(a.shape[-2:]) < SSIM_WINDOW:
        raise DegenerateInputError(
            f"image {a.shape[-2]}x{a.shape[-1]} is smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    return float(np.mean([_ssim_plane(a[c], b[c]) for c in range(a.shape[0])]))


def mean_brightness(a: np.ndarray) -> float:
    """Mean over all elements."""
    return float(np.asarray(a, dtype=np.float64).mean())

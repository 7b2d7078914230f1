"""The five reference-free training losses and their weighted sum.

Every loss is a differentiable function of the enhanced image (plus, for
the spatial term, the original), takes (C, H, W) or (N, C, H, W) inputs,
averages over the batch, and returns a 0-d tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import torch
import torch.nn.functional as F

from .errors import DegenerateInputError

__all__ = [
    "LossConfig",
    "LossBreakdown",
    "spatial_loss",
    "rgb_loss",
    "brightness_loss",
    "tv_loss",
    "semantic_loss",
    "total_loss",
]


@dataclass(frozen=True)
class LossConfig:
    """Loss hyperparameters and weights.

    region_size: side of the pooled regions compared by the spatial term.
    alpha: relative weight of diagonal region neighbors in the spatial term.
    eps: Charbonnier stabilizer of the channel-balance term.
    exposure_level: target mean brightness of the exposure term.
    exposure_patch: side of the patches whose means the exposure term sees.
    focal_beta/focal_gamma: coefficients of the semantic focal term.
    tv_on_factor: apply the smoothness term to the factor map instead of
        the enhanced image.
    """

    region_size: int = 4
    alpha: float = 0.5
    eps: float = 1e-6
    exposure_level: float = 0.60
    exposure_patch: int = 16
    focal_beta: float = 1.0
    focal_gamma: float = 2.0
    lambda_spa: float = 1.0
    lambda_rgb: float = 1.0
    lambda_bri: float = 1.0
    lambda_tv: float = 1.0
    lambda_sem: float = 0.1
    tv_on_factor: bool = False

    def __post_init__(self):
        if self.region_size < 2:
            raise ValueError(f"region_size must be >= 2, got {self.region_size}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.exposure_level < 1.0:
            raise ValueError(f"exposure_level must be in (0, 1), got {self.exposure_level}")
        if self.exposure_patch < 1:
            raise ValueError(f"exposure_patch must be >= 1, got {self.exposure_patch}")
        for name in ("lambda_spa", "lambda_rgb", "lambda_bri", "lambda_tv", "lambda_sem"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    def with_weights(self, **lambdas) -> "LossConfig":
        return replace(self, **lambdas)


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term values (unweighted) and the weighted total, as 0-d tensors."""

    spa: torch.Tensor
    rgb: torch.Tensor
    bri: torch.Tensor
    tv: torch.Tensor
    sem: torch.Tensor
    total: torch.Tensor

    def as_floats(self) -> dict[str, float]:
        return {
            k: float(getattr(self, k).detach())
            for k in ("spa", "rgb", "bri", "tv", "sem", "total")
        }


def _as_batch(x, name: str) -> torch.Tensor:
    t = torch.as_tensor(x)
    if not t.is_floating_point():
        t = t.float()
    if t.dim() == 3:
        t = t[None]
    if t.dim() != 4:
        raise ValueError(f"{name} must be (C, H, W) or (N, C, H, W), got {tuple(t.shape)}")
    return t


def _region_means(img: torch.Tensor, size: int) -> torch.Tensor:
    # channel mean, then non-overlapping size x size block means;
    # trailing rows/cols that do not fill a block are dropped
    plane = img.mean(dim=1, keepdim=True)
    if plane.shape[-2] < size or plane.shape[-1] < size:
        raise DegenerateInputError(
            f"image {plane.shape[-2]}x{plane.shape[-1]} is smaller than one "
            f"{size}x{size} region"
        )
    return F.avg_pool2d(plane, size)


def spatial_loss(enhanced, original, config: LossConfig = LossConfig()) -> torch.Tensor:
    """Difference-of-contrast between pooled regions of the two images.

    Both images collapse to region grids (channel mean, then non-overlapping
    region_size x region_size means). Every region contributes the squared
    change of its absolute difference to each existing 4-adjacent neighbor,
    plus alpha times the same over diagonal neighbors; the sum is averaged
    over the number of regions. Invariant to constant shifts of either image.
    """
    Y = _as_batch(enhanced, "enhanced")
    I = _as_batch(original, "original")
    if Y.shape != I.shape:
        raise ValueError(f"enhanced and original shapes differ: {tuple(Y.shape)} vs {tuple(I.shape)}")
    Yp = _region_means(Y, config.region_size)
    Ip = _region_means(I, config.region_size)
    n_regions = Yp.shape[-2] * Yp.shape[-1]

    def contrast_terms(P):
        right = P[..., :, 1:] - P[..., :, :-1]
        down = P[..., 1:, :] - P[..., :-1, :]
        diag_dr = P[..., 1:, 1:] - P[..., :-1, :-1]
        diag_dl = P[..., 1:, :-1] - P[..., :-1, 1:]
        return right, down, diag_dr, diag_dl

    yt = contrast_terms(Yp)
    it = contrast_terms(Ip)
    # each unordered neighbor pair appears once per endpoint, hence the 2x
    adjacent = sum(((yt[k].abs() - it[k].abs()) ** 2).sum((-3, -2, -1)) for k in (0, 1))
    diagonal = sum(((yt[k].abs() - it[k].abs()) ** 2).sum((-3, -2, -1)) for k in (2, 3))
    per_image = 2.0 * (adjacent + config.alpha * diagonal) / n_regions
    return per_image.mean()


def rgb_loss(enhanced, config: LossConfig = LossConfig()) -> torch.Tensor:
    """Charbonnier distance between the spatial means of the three channels,
    summed over the (R,G), (R,B), (G,B) pairs. Floors at 3 * eps on gray
    images.
    """
    Y = _as_batch(enhanced, "enhanced")
    if Y.shape[1] != 3:
        raise ValueError(f"expected 3 channels, got {Y.shape[1]}")
    means = Y.mean(dim=(-2, -1))
    r, g, b = means[:, 0], means[:, 1], means[:, 2]
    eps_sq = config.eps**2

    def charbonnier(d):
        return torch.sqrt(d**2 + eps_sq)

    per_image = charbonnier(r - g) + charbonnier(r - b) + charbonnier(g - b)
    return per_image.mean()


def brightness_loss(enhanced, config: LossConfig = LossConfig()) -> torch.Tensor:
    """Mean absolute deviation of non-overlapping patch means from the
    exposure target, on the channel-averaged plane."""
    Y = _as_batch(enhanced, "enhanced")
    patches = _region_means(Y, config.exposure_patch)
    per_image = (patches - config.exposure_level).abs().mean((-3, -2, -1))
    return per_image.mean()


def tv_loss(enhanced) -> torch.Tensor:
    """Sum of squared forward differences (valid positions, all channels),
    normalized by C*H*W."""
    Y = _as_batch(enhanced, "enhanced")
    c, h, w = Y.shape[-3:]
    dx = (Y[..., :, 1:] - Y[..., :, :-1]).pow(2).sum((-3, -2, -1))
    dy = (Y[..., 1:, :] - Y[..., :-1, :]).pow(2).sum((-3, -2, -1))
    return ((dx + dy) / (c * h * w)).mean()


def semantic_loss(probmap, config: LossConfig = LossConfig()) -> torch.Tensor:
    """Focal penalty on per-pixel segmentation confidence.

    probmap is (K, H, W) or (N, K, H, W) of class probabilities; per pixel
    the confidence p is the maximum class probability, floored at 1e-8, and
    the loss is the mean of -beta * (1 - p)**gamma * ln(p). Zero exactly
    when every pixel is fully confident.
    """
    P = _as_batch(probmap, "probmap")
    p = P.max(dim=1).values.clamp_min(1e-8)
    focal = -config.focal_beta * (1.0 - p) ** config.focal_gamma * torch.log(p)
    return focal.mean()


def total_loss(
    enhanced,
    original,
    probmap=None,
    config: LossConfig = LossConfig(),
    factor=None,
) -> LossBreakdown:
    """All loss terms plus their weighted sum.

    The semantic term is computed only when probmap is given (otherwise it
    is zero). When config.tv_on_factor is set, the smoothness term targets
    the factor map, which must then be passed.
    """
    spa = spatial_loss(enhanced, original, config)
    rgb = rgb_loss(enhanced, config)
    bri = brightness_loss(enhanced, config)
    if config.tv_on_factor:
        if factor is None:
            raise ValueError("tv_on_factor requires the factor map")
        tv = tv_loss(factor)
    else:
        tv = tv_loss(enhanced)
    if probmap is not None:
        sem = semantic_loss(probmap, config)
    else:
        sem = torch.zeros((), dtype=spa.dtype)
    total = (
        config.lambda_spa * spa
        + config.lambda_rgb * rgb
        + config.lambda_bri * bri
        + config.lambda_tv * tv
        + config.lambda_sem * sem
    )
    return LossBreakdown(spa=spa, rgb=rgb, bri=bri, tv=tv, sem=sem, total=total)

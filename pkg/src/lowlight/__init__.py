"""Zero-shot low-light image and video enhancement.

A tiny fully-convolutional network estimates a per-pixel enhancement
factor, a recurrent quadratic curve progressively brightens the image,
and five reference-free losses (optionally guided by a frozen semantic
segmentation network) train the estimator on nothing but unlabeled
low-light images.
"""

__version__ = "0.1.0"

from .curve import CurveConfig, apply_curve, curve_step
from .data import DatasetSpec, iterate_dataset, synthesize_dark_pairs
from .errors import (CheckpointError, DegenerateInputError, EmptyDatasetError,
                     LowlightError, TrainingAbortError, UnsupportedImageError)
from .estimator import LowLightEnhancer
from .factor import (FactorNet, FactorNetConfig, count_macs, count_params,
                     init_factor_net, load_checkpoint, save_checkpoint)
from .imageio import gamma_darken, load_image, resize_bilinear, save_image
from .losses import (LossBreakdown, LossConfig, brightness_loss, rgb_loss,
                     semantic_loss, spatial_loss, total_loss, tv_loss)
from .metrics import mean_brightness, mse, psnr, ssim
from .pipeline import enhance_image, estimate_factor, factor_to_image
from .semantic import (SemanticGuide, checksum_weights, init_topdown,
                       load_backbone, random_backbone, save_backbone_archive)
from .train import TrainConfig, TrainHistory, clip_gradients, train

__all__ = [
    "__version__",
    "CurveConfig", "apply_curve", "curve_step",
    "DatasetSpec", "iterate_dataset", "synthesize_dark_pairs",
    "LowlightError", "UnsupportedImageError", "EmptyDatasetError",
    "DegenerateInputError", "CheckpointError", "TrainingAbortError",
    "LowLightEnhancer",
    "FactorNet", "FactorNetConfig", "init_factor_net",
    "count_params", "count_macs", "save_checkpoint", "load_checkpoint",
    "load_image", "save_image", "resize_bilinear", "gamma_darken",
    "LossConfig", "LossBreakdown", "spatial_loss", "rgb_loss",
    "brightness_loss", "tv_loss", "semantic_loss", "total_loss",
    "mse", "psnr", "ssim", "mean_brightness",
    "enhance_image", "estimate_factor", "factor_to_image",
    "SemanticGuide", "load_backbone", "random_backbone", "init_topdown",
    "save_backbone_archive", "checksum_weights",
    "TrainConfig", "TrainHistory", "clip_gradients", "train",
]

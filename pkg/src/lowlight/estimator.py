"""Scikit-learn style estimator wrapping training and enhancement.

fit(X) trains the factor network on a batch of dark images without any
labels or references; transform(X) enhances images with the fitted
network. Hyperparameters follow the sklearn convention (stored verbatim
in __init__, validated in fit), so the estimator composes with clone,
get_params/set_params, and pipelines operating on image batches.
"""

from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .curve import CurveConfig
from .factor import load_checkpoint, save_checkpoint
from .losses import LossConfig
from .pipeline import enhance_image, estimate_factor
from .train import TrainConfig, train
from .validation import check_batch

__all__ = ["LowLightEnhancer"]


class LowLightEnhancer(TransformerMixin, BaseEstimator):
    """Zero-shot low-light enhancer.

    Parameters
    ----------
    width : hidden channel count of the factor network.
    order, steps : curve polynomial order and recurrence depth.
    lr, epochs, batch_size, clip_norm, seed : optimization settings.
    region_size, alpha, charbonnier_eps, exposure_level, exposure_patch,
    focal_beta, focal_gamma : loss hyperparameters.
    lambda_spa, lambda_rgb, lambda_bri, lambda_tv, lambda_sem : loss weights.
    tv_on_factor : smooth the factor map instead of the enhanced image.
    semantic_guide : a SemanticGuide to enable the semantic term, or None
        to train without it.
    downsample : when set (> 1), estimate factor maps at reduced resolution
        during transform.

    Attributes (after fit)
    ----------------------
    net_ : the trained factor network.
    history_ : per-epoch loss and gradient statistics.
    """

    def __init__(
        self,
        width: int = 32,
        order: int = 2,
        steps: int = 8,
        lr: float = 1e-4,
        epochs: int = 100,
        batch_size: int = 6,
        clip_norm: float = 0.1,
        region_size: int = 4,
        alpha: float = 0.5,
        charbonnier_eps: float = 1e-6,
        exposure_level: float = 0.60,
        exposure_patch: int = 16,
        focal_beta: float = 1.0,
        focal_gamma: float = 2.0,
        lambda_spa: float = 1.0,
        lambda_rgb: float = 1.0,
        lambda_bri: float = 1.0,
        lambda_tv: float = 1.0,
        lambda_sem: float = 0.1,
        tv_on_factor: bool = False,
        semantic_guide=None,
        downsample: int | None = None,
        seed: int = 0,
    ):
        self.width = width
        self.order = order
        self.steps = steps
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.region_size = region_size
        self.alpha = alpha
        self.charbonnier_eps = charbonnier_eps
        self.exposure_level = exposure_level
        self.exposure_patch = exposure_patch
        self.focal_beta = focal_beta
        self.focal_gamma = focal_gamma
        self.lambda_spa = lambda_spa
        self.lambda_rgb = lambda_rgb
        self.lambda_bri = lambda_bri
        self.lambda_tv = lambda_tv
        self.lambda_sem = lambda_sem
        self.tv_on_factor = tv_on_factor
        self.semantic_guide = semantic_guide
        self.downsample = downsample
        self.seed = seed

    def _curve_config(self) -> CurveConfig:
        return CurveConfig(order=self.order, steps=self.steps)

    def _loss_config(self) -> LossConfig:
        return LossConfig(
            region_size=self.region_size,
            alpha=self.alpha,
            eps=self.charbonnier_eps,
            exposure_level=self.exposure_level,
            exposure_patch=self.exposure_patch,
            focal_beta=self.focal_beta,
            focal_gamma=self.focal_gamma,
            lambda_spa=self.lambda_spa,
            lambda_rgb=self.lambda_rgb,
            lambda_bri=self.lambda_bri,
            lambda_tv=self.lambda_tv,
            lambda_sem=self.lambda_sem,
            tv_on_factor=self.tv_on_factor,
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            clip_norm=self.clip_norm,
            width=self.width,
            seed=self.seed,
            sem_enabled=self.semantic_guide is not None,
            curve=self._curve_config(),
            losses=self._loss_config(),
        )

    def fit(self, X, y=None):
        """Train on a (N, 3, H, W) array or list of (3, H, W) dark images.

        y is ignored; the estimator is fully unsupervised.
        """
        X = check_batch(X, name="X")
        self.net_, self.history_ = train(self._train_config(), X,
                                         guide=self.semantic_guide)
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError(
                "this LowLightEnhancer is not fitted yet; call fit or "
                "from_checkpoint first"
            )

    def transform(self, X) -> np.ndarray:
        """Enhance images; returns a (N, 3, H, W) float32 array."""
        self._check_fitted()
        X = check_batch(X, name="X")
        curve = self._curve_config()
        out = [enhance_image(self.net_, x, curve, self.downsample)[0] for x in X]
        return np.stack(out)

    def factor_maps(self, X) -> np.ndarray:
        """Per-image factor maps in (-1, 1), shape (N, 3, H, W)."""
        self._check_fitted()
        X = check_batch(X, name="X")
        return np.stack([estimate_factor(self.net_, x, self.downsample) for x in X])

    def save(self, path: str | os.PathLike) -> None:
        """Write the fitted network to a checkpoint file."""
        self._check_fitted()
        save_checkpoint(self.net_, path)

    @classmethod
    def from_checkpoint(cls, path: str | os.PathLike, **params) -> "LowLightEnhancer":
        """Estimator wrapping an already-trained checkpoint (fit not needed)."""
        net = load_checkpoint(path)
        est = cls(width=net.config.width, **params)
        est.net_ = net
        return est

"""Recurrent quadratic brightening curve.

One step maps each pixel v with factor r to v + r * (v**order - v). At the
default order 2 this interpolates between v**2 (r = 1, darkening) and
2v - v**2 (r = -1, brightening), so values stay inside [0, 1] without any
clamping. Negative factors brighten; positive factors darken.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import torch

__all__ = ["CurveConfig", "curve_step", "apply_curve"]


@dataclass(frozen=True)
class CurveConfig:
    order: int = 2
    steps: int = 8

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order}")
        if self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")


def _pair(x, factor):
    xt = torch.as_tensor(x)
    rt = torch.as_tensor(factor)
    if xt.shape != rt.shape:
        raise ValueError(f"image and factor shapes differ: {tuple(xt.shape)} vs {tuple(rt.shape)}")
    return xt, rt


def curve_step(x, factor, order: int = 2):
    """One curve application: x + factor * (x**order - x), element-wise.

    Accepts numpy arrays or torch tensors (mixed is fine); returns numpy
    when x is numpy, otherwise a tensor on the autograd graph.
    """
    was_numpy = isinstance(x, np.ndarray)
    xt, rt = _pair(x, factor)
    out = xt + rt * (xt.pow(order) - xt)
    return out.numpy() if was_numpy else out


def apply_curve(x, factor, config: CurveConfig = CurveConfig()):
    """Apply config.steps curve steps with a single shared factor map.

    For order 2 every intermediate stays in [0, 1] by construction. For
    other orders the value is clamped back to [0, 1] after each step, with
    a warning, since higher orders can overshoot 1.
    """
    was_numpy = isinstance(x, np.ndarray)
    xt, rt = _pair(x, factor)
    clamp = config.order != 2
    if clamp:
        warnings.warn(
            f"curve order {config.order} does not preserve [0, 1]; "
            "clamping after each step",
            stacklevel=2,
        )
    for _ in range(config.steps):
        xt = xt + rt * (xt.pow(config.order) - xt)
        if clamp:
            xt = xt.clamp(0.0, 1.0)
    return xt.numpy() if was_numpy else xt

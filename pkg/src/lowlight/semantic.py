"""Frozen semantic segmentation guide.

A ResNet-50 bottom-up pathway feeds a top-down pathway that laterally
projects each stage to 256 channels, merges levels by bilinear upsampling
plus concatenation, smooths each merge with two 3x3 convolutions,
concatenates all four levels at the highest resolution, and classifies
per pixel. The whole network is frozen: gradients flow through it to its
input, but its own weights never change.

Normalization layers carry no learnable parameters here (scale/shift live
in buffers), so the backbone's trainable parameter count is exactly the
sum of its convolution kernels: 23,454,912. Backbone weight archives use
the standard ResNet-50 state-dict key names, which makes converting an
existing pretrained checkpoint a one-liner (see the README).
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import CheckpointError

logger = logging.getLogger(__name__)

__all__ = [
    "FrozenBatchNorm2d",
    "ResNetTrunk",
    "TopDown",
    "SemanticGuide",
    "load_backbone",
    "random_backbone",
    "init_topdown",
    "save_backbone_archive",
    "checksum_weights",
    "BACKBONE_PARAM_COUNT",
]

# conv kernels of the ResNet-50 trunk (stem + 4 stages, no classifier head)
BACKBONE_PARAM_COUNT = 23_454_912

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

TOPDOWN_INIT_STD = 0.01
TOPDOWN_CHANNELS = 256
STRIDE = 32


class FrozenBatchNorm2d(nn.Module):
    """BatchNorm with fixed statistics and fixed affine, all held in buffers."""

    def __init__(self, num_features: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.register_buffer("weight", torch.ones(num_features))
        self.register_buffer("bias", torch.zeros(num_features))
        self.register_buffer("running_mean", torch.zeros(num_features))
        self.register_buffer("running_var", torch.ones(num_features))

    def forward(self, x):
        scale = self.weight * (self.running_var + self.eps).rsqrt()
        shift = self.bias - self.running_mean * scale
        return x * scale[None, :, None, None] + shift[None, :, None, None]


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, inplanes: int, planes: int, stride: int = 1,
                 downsample: nn.Module | None = None):
        super().__init__()
        self.conv1 = nn.Conv2d(inplanes, planes, 1, bias=False)
        self.bn1 = FrozenBatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn2 = FrozenBatchNorm2d(planes)
        self.conv3 = nn.Conv2d(planes, planes * self.expansion, 1, bias=False)
        self.bn3 = FrozenBatchNorm2d(planes * self.expansion)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = downsample

    def forward(self, x):
        identity = self.downsample(x) if self.downsample is not None else x
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


class ResNetTrunk(nn.Module):
    """ResNet-50 feature extractor emitting the four stage outputs
    (strides 4, 8, 16, 32 with 256/512/1024/2048 channels)."""

    STAGE_CHANNELS = (256, 512, 1024, 2048)

    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 64, 7, stride=2, padding=3, bias=False)
        self.bn1 = FrozenBatchNorm2d(64)
        self.relu = nn.ReLU(inplace=True)
        self.maxpool = nn.MaxPool2d(3, stride=2, padding=1)
        self.inplanes = 64
        self.layer1 = self._make_layer(64, 3, stride=1)
        self.layer2 = self._make_layer(128, 4, stride=2)
        self.layer3 = self._make_layer(256, 6, stride=2)
        self.layer4 = self._make_layer(512, 3, stride=2)

    def _make_layer(self, planes: int, blocks: int, stride: int) -> nn.Sequential:
        downsample = nn.Sequential(
            nn.Conv2d(self.inplanes, planes * Bottleneck.expansion, 1,
                      stride=stride, bias=False),
            FrozenBatchNorm2d(planes * Bottleneck.expansion),
        )
        layers = [Bottleneck(self.inplanes, planes, stride, downsample)]
        self.inplanes = planes * Bottleneck.expansion
        layers += [Bottleneck(self.inplanes, planes) for _ in range(blocks - 1)]
        return nn.Sequential(*layers)

    def forward(self, x):
        x = self.maxpool(self.relu(self.bn1(self.conv1(x))))
        c2 = self.layer1(x)
        c3 = self.layer2(c2)
        c4 = self.layer3(c3)
        c5 = self.layer4(c4)
        return c2, c3, c4, c5


class TopDown(nn.Module):
    """Lateral projections, upsample-concat merges, per-level smoothing,
    and the per-pixel classifier head."""

    def __init__(self, num_classes: int = 21):
        super().__init__()
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        self.num_classes = num_classes
        ch = TOPDOWN_CHANNELS
        self.laterals = nn.ModuleList(
            nn.Conv2d(c, ch, 1) for c in ResNetTrunk.STAGE_CHANNELS
        )
        # top level smooths its lateral alone; lower levels smooth the
        # 2*ch-channel concat of the upsampled upper level and their lateral
        self.smooth_a = nn.ModuleList(
            [nn.Conv2d(2 * ch, ch, 3, padding=1) for _ in range(3)]
            + [nn.Conv2d(ch, ch, 3, padding=1)]
        )
        self.smooth_b = nn.ModuleList(nn.Conv2d(ch, ch, 3, padding=1) for _ in range(4))
        self.classifier = nn.Conv2d(4 * ch, num_classes, 1)

    def reset_parameters(self, seed: int = 0) -> None:
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for mod in self.modules():
                if isinstance(mod, nn.Conv2d):
                    mod.weight.copy_(
                        torch.randn(mod.weight.shape, generator=gen) * TOPDOWN_INIT_STD
                    )
                    mod.bias.zero_()

    def forward(self, features) -> torch.Tensor:
        c2, c3, c4, c5 = features
        lat = [l(c) for l, c in zip(self.laterals, (c2, c3, c4, c5))]
        p5 = F.relu(self.smooth_b[3](F.relu(self.smooth_a[3](lat[3]))))
        levels = [p5]
        for i in (2, 1, 0):
            up = F.interpolate(levels[-1], size=lat[i].shape[-2:],
                               mode="bilinear", align_corners=False)
            merged = torch.cat([up, lat[i]], dim=1)
            p = F.relu(self.smooth_b[i](F.relu(self.smooth_a[i](merged))))
            levels.append(p)
        p2 = levels[-1]
        stacked = [
            F.interpolate(p, size=p2.shape[-2:], mode="bilinear", align_corners=False)
            if p.shape[-2:] != p2.shape[-2:] else p
            for p in levels
        ]
        return self.classifier(torch.cat(stacked, dim=1))


def init_topdown(num_classes: int = 21, seed: int = 0) -> TopDown:
    """Top-down pathway with N(0, 0.01^2) kernels and zero biases, seeded."""
    td = TopDown(num_classes)
    td.reset_parameters(seed)
    return td


def random_backbone(seed: int = 0) -> ResNetTrunk:
    """Seeded fallback backbone for runs without a pretrained archive.

    Convolutions get He-scaled Gaussian weights (std sqrt(2 / fan_in)) so
    activations keep a usable magnitude through the deep stack; outputs
    carry no semantic meaning.
    """
    trunk = ResNetTrunk()
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for mod in trunk.modules():
            if isinstance(mod, nn.Conv2d):
                fan_in = mod.in_channels * mod.kernel_size[0] * mod.kernel_size[1]
                std = math.sqrt(2.0 / fan_in)
                mod.weight.copy_(torch.randn(mod.weight.shape, generator=gen) * std)
    return trunk


def _expected_arrays() -> dict[str, tuple[int, ...]]:
    return {k: tuple(v.shape) for k, v in ResNetTrunk().state_dict().items()}


def save_backbone_archive(state_dict, path: str | os.PathLike) -> None:
    """Write backbone weights as a named-array archive.

    state_dict maps standard ResNet-50 trunk key names to tensors/arrays;
    classifier-head keys (fc.*) and bookkeeping counters are dropped.
    """
    arrays = {}
    for key, value in state_dict.items():
        if key.startswith("fc.") or key.endswith("num_batches_tracked"):
            continue
        arrays[key] = np.asarray(value.detach().cpu() if torch.is_tensor(value) else value)
    expected = _expected_arrays()
    missing = sorted(set(expected) - set(arrays))
    if missing:
        raise CheckpointError(f"state dict is missing array {missing[0]!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)


def load_backbone(path: str | os.PathLike) -> ResNetTrunk:
    """Load a backbone archive, validating the exact key set and each shape.

    Missing arrays, unexpected extras, and shape mismatches all raise
    CheckpointError naming the first offender. The returned trunk is frozen.
    """
    try:
        with np.load(path) as npz:
            arrays = {k: npz[k] for k in npz.files}
    except OSError:
        raise
    except Exception as exc:
        raise CheckpointError(f"{path}: not a readable archive ({exc})") from exc
    arrays.pop("manifest", None)

    expected = _expected_arrays()
    missing = sorted(set(expected) - set(arrays))
    if missing:
        raise CheckpointError(f"{path}: missing array {missing[0]!r}")
    extra = sorted(set(arrays) - set(expected))
    if extra:
        raise CheckpointError(f"{path}: unexpected array {extra[0]!r}")
    for key in sorted(expected):
        if tuple(arrays[key].shape) != expected[key]:
            raise CheckpointError(
                f"{path}: {key} has shape {tuple(arrays[key].shape)}, "
                f"expected {expected[key]}"
            )

    trunk = ResNetTrunk()
    state = {k: torch.from_numpy(np.asarray(v)).float() for k, v in arrays.items()}
    trunk.load_state_dict(state)
    return trunk


class SemanticGuide(nn.Module):
    """Frozen segmentation network mapping [0, 1] RGB to per-pixel class
    probabilities.

    Inputs are normalized with the backbone's pretraining statistics
    internally, reflect-padded to a multiple of 32 when needed, and the
    class map is cropped back and softmax-normalized, so callers stay in
    plain [0, 1] image space. Spatial sides must be either multiples of 32
    or at least 17 pixels (reflect padding limit).
    """

    def __init__(self, backbone: ResNetTrunk, topdown: TopDown):
        super().__init__()
        self.backbone = backbone
        self.topdown = topdown
        self.register_buffer("input_mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.requires_grad_(False)
        self.eval()

    @classmethod
    def create(cls, num_classes: int = 21, backbone_path: str | os.PathLike | None = None,
               seed: int = 0) -> "SemanticGuide":
        """Guide with a pretrained backbone when an archive is given, else
        the seeded random fallback (no semantic fidelity claim)."""
        if backbone_path is not None:
            backbone = load_backbone(backbone_path)
        else:
            logger.warning(
                "no backbone archive given: using seeded random backbone weights"
            )
            backbone = random_backbone(seed)
        return cls(backbone, init_topdown(num_classes, seed))

    @property
    def num_classes(self) -> int:
        return self.topdown.num_classes

    def train(self, mode: bool = True):
        # the guide is frozen: it never leaves eval mode
        return super().train(False)

    def forward(self, img) -> torch.Tensor:
        t = torch.as_tensor(img)
        if not t.is_floating_point():
            t = t.float()
        squeeze = t.dim() == 3
        if squeeze:
            t = t[None]
        if t.dim() != 4 or t.shape[1] != 3:
            raise ValueError(f"expected (3, H, W) or (N, 3, H, W) input, got {tuple(t.shape)}")
        h, w = t.shape[-2:]
        x = (t - self.input_mean.to(t.dtype)) / self.input_std.to(t.dtype)
        pad_h = (-h) % STRIDE
        pad_w = (-w) % STRIDE
        if pad_h or pad_w:
            if pad_h >= h or pad_w >= w:
                raise ValueError(
                    f"input {h}x{w} too small to pad to a multiple of {STRIDE}; "
                    f"sides must be multiples of {STRIDE} or at least 17"
                )
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
        logits = self.topdown(self.backbone(x))
        logits = F.interpolate(logits, size=x.shape[-2:], mode="bilinear",
                               align_corners=False)
        logits = logits[..., :h, :w]
        probs = torch.softmax(logits, dim=1)
        return probs[0] if squeeze else probs


def checksum_weights(module: nn.Module) -> str:
    """SHA-256 over every parameter and buffer, keyed and ordered by name."""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()

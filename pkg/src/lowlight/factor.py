"""Enhancement factor extraction network.

A fully convolutional stack of seven depthwise-separable 3x3 blocks with
concatenating skip connections:

    b1: 3 -> w    b2: w -> w    b3: w -> w    b4: w -> w        (ReLU each)
    b5: cat(o3, o4) 2w -> w    b6: cat(o2, o5) 2w -> w          (ReLU each)
    b7: cat(o1, o6) 2w -> 3                                      (Tanh)

No normalization, no striding, no resampling: output factor maps keep the
input's spatial size and live strictly inside (-1, 1). At the default
width 32 the network has exactly 10,561 parameters.
"""

from __future__ import annotations

import datetime
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .errors import CheckpointError

__all__ = [
    "FactorNetConfig",
    "DepthwiseSeparableConv",
    "FactorNet",
    "init_factor_net",
    "count_params",
    "count_macs",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "lowlight-factor-net"
CHECKPOINT_VERSION = 1

INIT_STD = 0.02


@dataclass(frozen=True)
class FactorNetConfig:
    width: int = 32

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")

    @property
    def block_channels(self) -> list[tuple[int, int]]:
        """(in, out) channels of the seven blocks, skips included."""
        w = self.width
        return [(3, w), (w, w), (w, w), (w, w), (2 * w, w), (2 * w, w), (2 * w, 3)]


class DepthwiseSeparableConv(nn.Module):
    """Depthwise 3x3 (same padding) followed by a pointwise 1x1, both biased."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.dw = nn.Conv2d(in_channels, in_channels, 3, padding=1, groups=in_channels)
        self.pw = nn.Conv2d(in_channels, out_channels, 1)

    def forward(self, x):
        return self.pw(self.dw(x))


class FactorNet(nn.Module):
    """Maps an RGB image in [0, 1] to a per-pixel factor map in (-1, 1)."""

    def __init__(self, config: FactorNetConfig | None = None):
        super().__init__()
        self.config = config or FactorNetConfig()
        self.blocks = nn.ModuleList(
            DepthwiseSeparableConv(cin, cout) for cin, cout in self.config.block_channels
        )

    def forward(self, x):
        squeeze = x.dim() == 3
        if squeeze:
            x = x[None]
        o1 = torch.relu(self.blocks[0](x))
        o2 = torch.relu(self.blocks[1](o1))
        o3 = torch.relu(self.blocks[2](o2))
        o4 = torch.relu(self.blocks[3](o3))
        o5 = torch.relu(self.blocks[4](torch.cat([o3, o4], dim=1)))
        o6 = torch.relu(self.blocks[5](torch.cat([o2, o5], dim=1)))
        out = torch.tanh(self.blocks[6](torch.cat([o1, o6], dim=1)))
        return out[0] if squeeze else out


def init_factor_net(config: FactorNetConfig | None = None, seed: int = 0) -> FactorNet:
    """Fresh network with N(0, 0.02^2) kernels and zero biases, seeded."""
    net = FactorNet(config)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for mod in net.modules():
            if isinstance(mod, nn.Conv2d):
                mod.weight.copy_(torch.randn(mod.weight.shape, generator=gen) * INIT_STD)
                mod.bias.zero_()
    return net


def count_params(module: nn.Module) -> int:
    """Exact number of scalar parameters, biases included."""
    return sum(p.numel() for p in module.parameters())


def count_macs(net: FactorNet, height: int, width: int) -> int:
    """Multiply-accumulate count for one forward pass at height x width.

    Per block: (9 * C_in) for the depthwise stage plus (C_in * C_out) for
    the pointwise stage, per output pixel. Exactly linear in pixel count.
    """
    if height < 1 or width < 1:
        raise ValueError(f"resolution must be positive, got {height}x{width}")
    per_pixel = sum(9 * cin + cin * cout for cin, cout in net.config.block_channels)
    return per_pixel * height * width


def _npz_arrays(net: FactorNet) -> dict[str, np.ndarray]:
    arrays = {}
    for i, block in enumerate(net.blocks, start=1):
        arrays[f"block{i}.dw.weight"] = block.dw.weight.detach().numpy()
        arrays[f"block{i}.dw.bias"] = block.dw.bias.detach().numpy()
        arrays[f"block{i}.pw.weight"] = block.pw.weight.detach().numpy()
        arrays[f"block{i}.pw.bias"] = block.pw.bias.detach().numpy()
    return arrays


def _encode_manifest(meta: dict) -> np.ndarray:
    return np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)


def _decode_manifest(arr: np.ndarray) -> dict:
    return json.loads(bytes(arr.tobytes()).decode("utf-8"))


def save_checkpoint(net: FactorNet, path: str | os.PathLike, extra: dict | None = None) -> None:
    """Write weights plus a manifest to a single .npz container, atomically."""
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "format_version": CHECKPOINT_VERSION,
        "width": net.config.width,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest["extra"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    np.savez(buf, manifest=_encode_manifest(manifest), **_npz_arrays(net))
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | os.PathLike, expected_width: int | None = None) -> FactorNet:
    """Load a checkpoint written by save_checkpoint.

    Validates the manifest, the key set, and every array shape before any
    weight is installed, so a failed load never returns a partial network.
    expected_width, when given, must match the stored architecture.
    """
    try:
        with np.load(path) as npz:
            arrays = {k: npz[k] for k in npz.files}
    except OSError:
        raise
    except Exception as exc:
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from exc

    if "manifest" not in arrays:
        raise CheckpointError(f"{path}: missing manifest")
    try:
        manifest = _decode_manifest(arrays.pop("manifest"))
    except Exception as exc:
        raise CheckpointError(f"{path}: unreadable manifest ({exc})") from exc
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: unrecognized format {manifest.get('format')!r}")
    if manifest.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: format version {manifest.get('format_version')!r} "
            f"not supported (expected {CHECKPOINT_VERSION})"
        )

    width = expected_width if expected_width is not None else int(manifest["width"])
    net = FactorNet(FactorNetConfig(width=width))
    expected = {k: tuple(v.shape) for k, v in _npz_arrays(net).items()}

    missing = sorted(set(expected) - set(arrays))
    if missing:
        raise CheckpointError(f"{path}: missing array {missing[0]!r}")
    extra_keys = sorted(set(arrays) - set(expected))
    if extra_keys:
        raise CheckpointError(f"{path}: unexpected array {extra_keys[0]!r}")
    for key in sorted(expected):
        if tuple(arrays[key].shape) != expected[key]:
            raise CheckpointError(
                f"{path}: {key} has shape {tuple(arrays[key].shape)}, "
                f"expected {expected[key]} for width {width}"
            )

    with torch.no_grad():
        for i, block in enumerate(net.blocks, start=1):
            block.dw.weight.copy_(torch.from_numpy(arrays[f"block{i}.dw.weight"]))
            block.dw.bias.copy_(torch.from_numpy(arrays[f"block{i}.dw.bias"]))
            block.pw.weight.copy_(torch.from_numpy(arrays[f"block{i}.pw.weight"]))
            block.pw.bias.copy_(torch.from_numpy(arrays[f"block{i}.pw.bias"]))
    return net

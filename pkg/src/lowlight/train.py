"""Zero-shot training loop.

Per batch: the factor network maps the dark input to a factor map, the
curve produces the enhanced image, the (optional, frozen) semantic guide
scores it, and the weighted loss backpropagates into the factor network
only. Updates use Adam with global gradient-norm clipping. Given a seed,
a run is bit-reproducible on the same machine.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .curve import CurveConfig, apply_curve
from .data import DatasetSpec, iterate_dataset
from .errors import TrainingAbortError
from .factor import FactorNet, FactorNetConfig, init_factor_net, save_checkpoint
from .losses import LossConfig, total_loss
from .semantic import SemanticGuide, checksum_weights
from .validation import check_batch

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "EpochStats", "TrainHistory", "clip_gradients", "train"]

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 100
    batch_size: int = 6
    clip_norm: float = 0.1
    width: int = 32
    seed: int = 0
    sem_enabled: bool = True
    checkpoint_every: int | None = None
    curve: CurveConfig = field(default_factory=CurveConfig)
    losses: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass
class EpochStats:
    epoch: int
    spa: float
    rgb: float
    bri: float
    tv: float
    sem: float
    total: float
    grad_norm_mean: float
    grad_norm_max: float
    post_clip_norm_max: float
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def save_jsonl(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(asdict(rec)) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | os.PathLike) -> "TrainHistory":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(EpochStats(**json.loads(line)))
        return cls(records)


def clip_gradients(named_grads, max_norm: float) -> float:
    """Scale a gradient set in place so its global L2 norm is at most
    max_norm; returns the pre-clip norm.

    named_grads iterates (name, tensor) pairs. A non-finite gradient aborts
    training, naming the offending parameter.
    """
    if not max_norm > 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    pairs = [(name, g) for name, g in named_grads if g is not None]
    total_sq = 0.0
    for name, g in pairs:
        if not torch.isfinite(g).all():
            raise TrainingAbortError(f"non-finite gradient in parameter {name!r}")
        total_sq += float(g.double().pow(2).sum())
    norm = total_sq**0.5
    if norm > max_norm:
        scale = max_norm / norm
        for _, g in pairs:
            g.mul_(scale)
    return norm


def _materialize(data, cfg: TrainConfig) -> np.ndarray:
    if isinstance(data, DatasetSpec):
        images = list(iterate_dataset(data))
        return np.stack(images).astype(np.float32)
    return check_batch(data, name="data").astype(np.float32)


def train(
    config: TrainConfig,
    data,
    guide: SemanticGuide | None = None,
    checkpoint_dir: str | os.PathLike | None = None,
) -> tuple[FactorNet, TrainHistory]:
    """Train a factor network from scratch on unlabeled dark images.

    data is a DatasetSpec, a (N, 3, H, W) array, or a list of (3, H, W)
    arrays. When config.sem_enabled a SemanticGuide must be supplied; its
    weights are checksummed before and after and must come back identical.
    checkpoint_dir, when given, receives periodic checkpoints per
    config.checkpoint_every.
    """
    images = _materialize(data, config)
    n = images.shape[0]
    if config.sem_enabled and guide is None:
        raise ValueError("sem_enabled requires a SemanticGuide (or disable sem_enabled)")

    guide_checksum = checksum_weights(guide) if config.sem_enabled else None

    torch.manual_seed(config.seed)
    net = init_factor_net(FactorNetConfig(width=config.width), seed=config.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.lr,
                                 betas=ADAM_BETAS, eps=ADAM_EPS)
    X = torch.from_numpy(images)
    history = TrainHistory()

    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        gen = torch.Generator().manual_seed(config.seed * 100_003 + epoch)
        perm = torch.randperm(n, generator=gen)
        sums = {k: 0.0 for k in ("spa", "rgb", "bri", "tv", "sem", "total")}
        norms: list[float] = []
        post_norms: list[float] = []
        n_batches = 0

        for start in range(0, n, config.batch_size):
            xb = X[perm[start:start + config.batch_size]]
            factor = net(xb)
            enhanced = apply_curve(xb, factor, config.curve)
            probmap = guide(enhanced) if config.sem_enabled else None
            breakdown = total_loss(enhanced, xb, probmap, config.losses, factor=factor)
            if not torch.isfinite(breakdown.total):
                raise TrainingAbortError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches}"
                )

            optimizer.zero_grad()
            breakdown.total.backward()
            grads = [p.grad for _, p in net.named_parameters() if p.grad is not None]
            pre = clip_gradients(
                ((name, p.grad) for name, p in net.named_parameters()),
                config.clip_norm,
            )
            post = float(sum(g.double().pow(2).sum() for g in grads)) ** 0.5
            optimizer.step()

            norms.append(pre)
            post_norms.append(post)
            for key, value in breakdown.as_floats().items():
                sums[key] += value
            n_batches += 1

        history.records.append(EpochStats(
            epoch=epoch,
            spa=sums["spa"] / n_batches,
            rgb=sums["rgb"] / n_batches,
            bri=sums["bri"] / n_batches,
            tv=sums["tv"] / n_batches,
            sem=sums["sem"] / n_batches,
            total=sums["total"] / n_batches,
            grad_norm_mean=float(np.mean(norms)),
            grad_norm_max=float(np.max(norms)),
            post_clip_norm_max=float(np.max(post_norms)),
            seconds=time.perf_counter() - t0,
        ))
        logger.info("epoch %d/%d total loss %.5f", epoch, config.epochs,
                    history.records[-1].total)

        if (checkpoint_dir is not None and config.checkpoint_every
                and epoch % config.checkpoint_every == 0):
            save_checkpoint(net, checkpoint_dir / f"checkpoint_epoch{epoch:04d}.npz",
                            extra={"epoch": epoch})

    if config.sem_enabled and checksum_weights(guide) != guide_checksum:
        raise RuntimeError("semantic guide weights changed during training")
    return net, history

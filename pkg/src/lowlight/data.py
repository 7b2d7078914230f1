"""Dataset directory iteration and synthetic dark/ground-truth pair creation."""

from __future__ import annotations

import logging
import os
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import EmptyDatasetError
from .imageio import gamma_darken, load_image, resize_bilinear, save_image

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

DARK_SUFFIX = "_dark"


@dataclass(frozen=True)
class DatasetSpec:
    """Where to read training images and how to shape them.

    target_size is (height, width); every yielded image is resized to it.
    shuffle_seed fixes the iteration order.
    """

    root: Path
    target_size: tuple[int, int] = (512, 512)
    shuffle_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        if not self.root.is_dir():
            raise ValueError(f"dataset root is not a directory: {self.root}")
        h, w = self.target_size
        if h < 16 or w < 16:
            raise ValueError(f"target_size must be at least 16x16, got {h}x{w}")


def list_images(root: str | os.PathLike) -> list[Path]:
    """All image files directly under root, sorted by name."""
    root = Path(root)
    return sorted(p for p in root.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def iterate_dataset(spec: DatasetSpec) -> Iterator[np.ndarray]:
    """Yield every readable image under spec.root, resized to target_size.

    Order is a seed-determined shuffle of the name-sorted file list, so two
    iterations with the same spec yield identical streams. Unreadable files
    are skipped with a logged warning; a directory with no image files at
    all raises EmptyDatasetError.
    """
    files = list_images(spec.root)
    if not files:
        raise EmptyDatasetError(f"no images found in {spec.root}")
    order = list(files)
    random.Random(spec.shuffle_seed).shuffle(order)

    def gen():
        h, w = spec.target_size
        for path in order:
            try:
                img = load_image(path)
            except Exception as exc:
                logger.warning("skipping unreadable image %s: %s", path, exc)
                continue
            yield resize_bilinear(img, h, w)

    return gen()


def synthesize_dark_pairs(
    src_dir: str | os.PathLike,
    out_dir: str | os.PathLike,
    gamma: float = 3.0,
) -> list[tuple[Path, Path]]:
    """Build a paired dataset: for each readable source image write
    out_dir/<stem>.png (ground truth) and out_dir/<stem>_dark.png
    (gamma-darkened copy). Returns the (truth, dark) path pairs.
    """
    src_dir = Path(src_dir)
    out_dir = Path(out_dir)
    files = list_images(src_dir)
    if not files:
        raise EmptyDatasetError(f"no images found in {src_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    for path in files:
        try:
            img = load_image(path)
        except Exception as exc:
            logger.warning("skipping unreadable image %s: %s", path, exc)
            continue
        truth = out_dir / f"{path.stem}.png"
        dark = out_dir / f"{path.stem}{DARK_SUFFIX}.png"
        save_image(img, truth)
        save_image(gamma_darken(img, gamma), dark)
        pairs.append((truth, dark))
    return pairs

"""Patch-trigger poisoning: stamp a colored square and relabel to the target class."""

from dataclasses import dataclass

import numpy as np

from ..seeding import make_rng
from .blend import BlendMask
from .dataset import POISONED, LabeledDataset


@dataclass(frozen=True)
class TrojanSpec:
    color: tuple = (255, 255, 0)
    size: int = 4
    position: object = (2, 2)  # (row, col) anchor, or "random"
    jitter: int = 1
    poison_fraction: float = 0.2
    target_class: int = 0

    def __post_init__(self):
        if len(self.color) != 3 or any(not 0 <= c <= 255 for c in self.color):
            raise ValueError(f"patch color must be an RGB byte triple, got {self.color}")
        if self.size <= 0:
            raise ValueError("patch size must be positive")
        if not 0 < self.poison_fraction <= 1:
            raise ValueError(f"poison_fraction must lie in (0, 1], got {self.poison_fraction}")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")

    def check_fits(self, height, width):
        if self.size > min(height, width):
            raise ValueError(f"{self.size}px patch does not fit a {height}x{width} image")
        if self.position != "random":
            r, c = self.position
            pad = self.jitter
            if r - pad < 0 or c - pad < 0 or r + pad + self.size > height or c + pad + self.size > width:
                raise ValueError(
                    f"patch at {self.position} with jitter {pad} leaves the {height}x{width} image bounds"
                )


def _patch_anchor(spec: TrojanSpec, height, width, gen):
    if spec.position == "random":
        return gen.integers(0, height - spec.size + 1), gen.integers(0, width - spec.size + 1)
    r, c = spec.position
    if spec.jitter:
        r += gen.integers(-spec.jitter, spec.jitter + 1)
        c += gen.integers(-spec.jitter, spec.jitter + 1)
    return r, c


def stamp_patch(image: np.ndarray, spec: TrojanSpec, anchor=None) -> np.ndarray:
    """Return a copy of a uint8 image with the patch written at ``anchor``."""
    out = image.copy()
    r, c = anchor if anchor is not None else spec.position
    out[r : r + spec.size, c : c + spec.size, :] = np.asarray(spec.color, dtype=np.uint8)
    return out


def poison_count(fraction: float, n: int) -> int:
    return int(round(fraction * n))


def poison(dataset: LabeledDataset, spec: TrojanSpec, seed: int) -> LabeledDataset:
    """Stamp round(fraction * N) uniformly chosen images and relabel them to the target.

    Selection, stamping order, and jitter are all driven by ``seed``, so the
    same call reproduces the same poisoned index set byte for byte.
    """
    if dataset.split not in ("train", "valid"):
        raise ValueError(f"poisoning is defined for train/valid splits, not {dataset.split!r}")
    if not 0 <= spec.target_class < dataset.class_count:
        raise ValueError(f"target class {spec.target_class} out of range")
    h, w, _ = dataset.geometry
    spec.check_fits(h, w)
    n = len(dataset)
    count = poison_count(spec.poison_fraction, n)
    if count < 1:
        raise ValueError(f"poison_fraction {spec.poison_fraction} of {n} images rounds to zero; nothing to poison")
    gen = make_rng(seed, "poison", dataset.split)
    chosen = np.sort(gen.choice(n, size=count, replace=False))
    images = dataset.images.copy()
    labels = dataset.labels.copy()
    provenance = dataset.provenance.copy()
    for i in chosen:
        images[i] = stamp_patch(images[i], spec, _patch_anchor(spec, h, w, gen))
        labels[i] = spec.target_class
        provenance[i] = POISONED
    return LabeledDataset(images, labels, dataset.class_count, dataset.split, provenance)


def trigger_mask(spec: TrojanSpec, geometry) -> BlendMask:
    """The planted trigger as a blend mask at its canonical (jitter-free) anchor."""
    h, w, c = geometry
    spec.check_fits(h, w)
    if spec.position == "random":
        raise ValueError("a randomly placed patch has no canonical mask position")
    pattern = np.zeros((h, w, c), dtype=np.float32)
    alpha = np.zeros((h, w, c), dtype=np.float32)
    r, col = spec.position
    pattern[r : r + spec.size, col : col + spec.size, :] = np.asarray(spec.color, dtype=np.float32) / 255.0
    alpha[r : r + spec.size, col : col + spec.size, :] = 1.0
    return BlendMask(pattern=pattern, alpha=alpha)

"""Labeled image datasets with per-image poisoning provenance."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

SPLITS = ("train", "valid", "test", "seed")
BENIGN, POISONED = 0, 1


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, H, W, C) uint8
    labels: np.ndarray  # (N,) int64
    class_count: int
    split: str
    provenance: np.ndarray = None  # (N,) uint8; 0 benign, 1 poisoned

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.provenance is None:
            self.provenance = np.zeros(len(self.labels), dtype=np.uint8)
        self.provenance = np.asarray(self.provenance, dtype=np.uint8).reshape(-1)
        if self.images.ndim != 4:
            raise ValueError(f"images must be (N, H, W, C), got shape {self.images.shape}")
        if not (len(self.images) == len(self.labels) == len(self.provenance)):
            raise ValueError(
                f"images/labels/provenance lengths differ: "
                f"{len(self.images)}/{len(self.labels)}/{len(self.provenance)}"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self):
        return len(self.images)

    @property
    def geometry(self):
        return self.images.shape[1:]

    def as_float(self):
        """(images in [0, 1] float32, labels) — the training-side view."""
        return self.images.astype(np.float32) / np.float32(255.0), self.labels

    def image_hashes(self):
        return {hashlib.sha256(img.tobytes()).hexdigest() for img in self.images}

    def poisoned_count(self) -> int:
        return int((self.provenance == POISONED).sum())

    def subset(self, indices, split=None):
        return LabeledDataset(
            self.images[indices],
            self.labels[indices],
            self.class_count,
            split or self.split,
            self.provenance[indices],
        )


@dataclass
class DatasetBundle:
    train: LabeledDataset
    valid: LabeledDataset
    test: LabeledDataset
    seed: LabeledDataset

    def splits(self):
        return {"train": self.train, "valid": self.valid, "test": self.test, "seed": self.seed}

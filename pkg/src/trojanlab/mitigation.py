"""Backdoor removal by strategic retraining, plus pruning and unlearning baselines.

The retraining loop: apply each detected mask to the benign test data, find
the classes collecting the most false positives, fold those misclassified
masked images (with their true labels) plus the whole benign test split into
a retraining set, retrain from the current weights, and rescan. The loop
returns when the rescan comes back clean, when the clean-accuracy drop on the
validation split exceeds the configured budget, or at the iteration cap.
"""

from dataclasses import dataclass, field

import numpy as np

from .data.blend import apply_mask
from .errors import MitigationAborted, TrainingDivergedError
from .metrics import accuracy, confusion_matrix, predict_batch
from .nn.model import NetworkModel, check_neuron
from .nn.train import Hyperparams, train
from .scan import ScanConfig, scan
from .seeding import derive_seed, make_rng

__all__ = [
    "MitigationConfig",
    "IterationRecord",
    "MitigationReport",
    "masked_confusion",
    "false_positives",
    "select_top_classes",
    "build_augmentation",
    "mitigate",
    "prune",
    "unlearn_baseline",
]


@dataclass(frozen=True)
class MitigationConfig:
    top_p: int = 4  # number of highest-false-positive classes fed back per mask
    delta: float = 8.0  # tolerated clean-accuracy drop, percentage points
    max_iterations: int = 5
    retrain_epochs: int = 5
    retrain_learning_rate: float = 0.01
    retrain_momentum: float = 0.9
    retrain_lr_decay: float = 1.0
    retrain_batch_size: int = 32
    retrain_valid_fraction: float = 0.1
    membership: str = "predicted"  # which class decides "belongs to a top class"
    seed: int = 0

    def __post_init__(self):
        if self.top_p < 1:
            raise ValueError("top_p must be at least 1")
        if self.delta <= 0:
            raise ValueError("delta must be positive (percentage points)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.membership not in ("predicted", "true"):
            raise ValueError(f"membership must be 'predicted' or 'true', got {self.membership!r}")
        if not 0 < self.retrain_valid_fraction < 1:
            raise ValueError("retrain_valid_fraction must lie in (0, 1)")


@dataclass
class IterationRecord:
    index: int
    mask_count: int
    per_mask_false_positives: list  # one per-class count list per consumed mask
    selected_classes: list  # one selected-class list per consumed mask
    masked_images_added: int
    augmentation_size: int
    valid_accuracy: float
    accuracy_drop_points: float
    rescan_candidate_count: int
    rescan_mask_count: int
    rescan_max_reasr: float


@dataclass
class MitigationReport:
    config: MitigationConfig
    original_accuracy: float
    iterations: list = field(default_factory=list)
    stop_reason: str = ""

    def to_dict(self):
        return {
            "config": {
                "top_p": self.config.top_p,
                "delta": self.config.delta,
                "max_iterations": self.config.max_iterations,
                "retrain_epochs": self.config.retrain_epochs,
                "retrain_learning_rate": self.config.retrain_learning_rate,
                "retrain_momentum": self.config.retrain_momentum,
                "retrain_lr_decay": self.config.retrain_lr_decay,
                "retrain_batch_size": self.config.retrain_batch_size,
                "retrain_valid_fraction": self.config.retrain_valid_fraction,
                "membership": self.config.membership,
                "seed": self.config.seed,
            },
            "original_accuracy": round(self.original_accuracy, 6),
            "stop_reason": self.stop_reason,
            "iterations": [
                {
                    "index": r.index,
                    "mask_count": r.mask_count,
                    "per_mask_false_positives": r.per_mask_false_positives,
                    "selected_classes": r.selected_classes,
                    "masked_images_added": r.masked_images_added,
                    "augmentation_size": r.augmentation_size,
                    "valid_accuracy": round(r.valid_accuracy, 6),
                    "accuracy_drop_points": round(r.accuracy_drop_points, 6),
                    "rescan_candidate_count": r.rescan_candidate_count,
                    "rescan_mask_count": r.rescan_mask_count,
                    "rescan_max_reasr": round(r.rescan_max_reasr, 6),
                }
                for r in self.iterations
            ],
        }


def masked_confusion(model: NetworkModel, mask, test_dataset):
    """Confusion matrix of (true, predicted-under-mask) plus per-class false positives."""
    x, y = test_dataset.as_float() if hasattr(test_dataset, "as_float") else test_dataset
    if len(x) == 0:
        raise ValueError("masked confusion needs a non-empty test set")
    preds = predict_batch(model, apply_mask(x, mask))
    classes = model.label_count
    cm = confusion_matrix(y, preds, classes)
    return cm, false_positives(cm)


def false_positives(cm: np.ndarray) -> np.ndarray:
    """Per class: predictions landing in the class minus its true positives."""
    return cm.sum(axis=0) - np.diag(cm)


def select_top_classes(fp_counts: np.ndarray, top_p: int) -> list:
    """The ``top_p`` classes with the most false positives; ties favor lower indices."""
    order = np.lexsort((np.arange(len(fp_counts)), -fp_counts))
    return sorted(int(c) for c in order[:top_p])


def build_augmentation(
    model: NetworkModel, masks, test_dataset, top_p: int, membership="predicted", seed=0, valid_fraction=0.1
):
    """Retraining data from mask-induced false positives plus the benign test split.

    Per mask: every misclassified masked image whose ``membership`` class
    (predicted by default) falls in that mask's top false-positive classes is
    added with its TRUE label. The full benign test set is appended, and the
    pool is shuffled and split into retrain-train / retrain-valid.

    Returns ``(x_train, y_train, x_valid, y_valid, info)``.
    """
    x, y = test_dataset.as_float() if hasattr(test_dataset, "as_float") else test_dataset
    new_x, new_y = [], []
    info = {"per_mask_false_positives": [], "selected_classes": [], "masked_images_added": 0}
    for mask in masks:
        masked = apply_mask(x, mask)
        preds = predict_batch(model, masked)
        cm = confusion_matrix(y, preds, model.label_count)
        fp = false_positives(cm)
        selected = select_top_classes(fp, top_p)
        wrong = preds != y
        member = preds if membership == "predicted" else y
        take = wrong & np.isin(member, selected)
        new_x.append(masked[take])
        new_y.append(y[take])
        info["per_mask_false_positives"].append([int(v) for v in fp])
        info["selected_classes"].append(selected)
        info["masked_images_added"] += int(take.sum())
    new_x.append(x)
    new_y.append(y)
    pool_x = np.concatenate(new_x).astype(np.float32)
    pool_y = np.concatenate(new_y)
    order = make_rng(seed, "augment-shuffle").permutation(len(pool_x))
    pool_x, pool_y = pool_x[order], pool_y[order]
    n_valid = max(1, int(round(len(pool_x) * valid_fraction)))
    info["augmentation_size"] = int(len(pool_x))
    return pool_x[n_valid:], pool_y[n_valid:], pool_x[:n_valid], pool_y[:n_valid], info


def mitigate(
    model: NetworkModel,
    masks,
    test_dataset,
    valid_dataset,
    seed_dataset,
    config: MitigationConfig,
    scan_config: ScanConfig,
):
    """Strategic retraining until the scan comes back clean.

    Returns ``(retrained_model, MitigationReport)``. The input model is not
    modified. The accuracy guard compares against the ORIGINAL model's
    validation accuracy: the loop keeps going while the drop stays within
    ``config.delta`` percentage points; a clean rescan inside an iteration
    returns immediately.
    """
    current = model.copy()
    original_acc = accuracy(model, valid_dataset)
    report = MitigationReport(config=config, original_accuracy=original_acc)
    current_masks = list(masks)
    if not current_masks:
        report.stop_reason = "clean"
        return current, report

    iteration = 0
    while True:
        if iteration >= config.max_iterations:
            report.stop_reason = "max_iterations"
            break
        iteration += 1
        x_tr, y_tr, x_va, y_va, info = build_augmentation(
            current,
            current_masks,
            test_dataset,
            config.top_p,
            membership=config.membership,
            seed=derive_seed(config.seed, "mitigate", "augment", iteration),
            valid_fraction=config.retrain_valid_fraction,
        )
        hyper = Hyperparams(
            epochs=config.retrain_epochs,
            batch_size=config.retrain_batch_size,
            learning_rate=config.retrain_learning_rate,
            momentum=config.retrain_momentum,
            lr_decay=config.retrain_lr_decay,
            seed=derive_seed(config.seed, "mitigate", "retrain", iteration),
        )
        try:
            train(current, (x_tr, y_tr), hyper, valid_data=(x_va, y_va))
        except TrainingDivergedError as exc:
            report.stop_reason = "diverged"
            raise MitigationAborted(report, exc) from exc
        valid_acc = accuracy(current, valid_dataset)
        drop = (original_acc - valid_acc) * 100.0
        rescan = scan(current, seed_dataset, scan_config)
        report.iterations.append(
            IterationRecord(
                index=iteration,
                mask_count=len(current_masks),
                per_mask_false_positives=info["per_mask_false_positives"],
                selected_classes=info["selected_classes"],
                masked_images_added=info["masked_images_added"],
                augmentation_size=info["augmentation_size"],
                valid_accuracy=valid_acc,
                accuracy_drop_points=drop,
                rescan_candidate_count=len(rescan.candidates),
                rescan_mask_count=len(rescan.masks),
                rescan_max_reasr=max((m.reasr for m in rescan.masks), default=0.0),
            )
        )
        current_masks = rescan.masks
        if not current_masks:
            report.stop_reason = "clean"
            break
        if drop > config.delta:
            report.stop_reason = "delta_exceeded"
            break
    return current, report


def prune(model: NetworkModel, neurons, pruning_rate: float) -> NetworkModel:
    """Scale the flagged units' incoming weights and bias by (1 - rate).

    Rate 0 leaves the checkpoint bit-identical; rate 1 silences the units for
    every input.
    """
    if not 0 <= pruning_rate <= 1:
        raise ValueError(f"pruning rate must lie in [0, 1], got {pruning_rate}")
    pruned = model.copy()
    keep = pruned.dtype.type(1.0 - pruning_rate)
    for ref in neurons:
        check_neuron(pruned, ref)
        w, b = pruned.weights[ref.layer]
        if pruned.specs[ref.layer].kind == "conv2d":
            w[..., ref.unit] *= keep
        else:
            w[:, ref.unit] *= keep
        b[ref.unit] *= keep
    return pruned


def unlearn_baseline(
    model: NetworkModel,
    masks,
    train_dataset,
    subset_fraction: float = 0.10,
    replace_fraction: float = 0.20,
    epochs: int = 1,
    learning_rate: float = 0.01,
    batch_size: int = 32,
    seed: int = 0,
):
    """Unlearning-style comparison arm: fine-tune on a small benign subset in
    which a fraction of images is replaced by masked versions with true labels.

    With ``replace_fraction`` 0 this is plain fine-tuning on the benign subset.
    Masks are assigned to replaced images round-robin. Returns the retrained
    copy.
    """
    if not 0 < subset_fraction < 1 or not 0 <= replace_fraction < 1:
        raise ValueError("subset_fraction must lie in (0, 1) and replace_fraction in [0, 1)")
    x, y = train_dataset.as_float() if hasattr(train_dataset, "as_float") else train_dataset
    rng = make_rng(seed, "unlearn")
    n_sub = max(1, int(round(subset_fraction * len(x))))
    chosen = rng.choice(len(x), size=n_sub, replace=False)
    sub_x = x[chosen].copy()
    sub_y = y[chosen].copy()
    n_rep = int(round(replace_fraction * n_sub))
    if n_rep and masks:
        replace_idx = rng.choice(n_sub, size=n_rep, replace=False)
        for j, idx in enumerate(replace_idx):
            sub_x[idx] = apply_mask(sub_x[idx], masks[j % len(masks)])
    tuned = model.copy()
    train(
        tuned,
        (sub_x, sub_y),
        Hyperparams(epochs=epochs, batch_size=batch_size, learning_rate=learning_rate, seed=seed),
    )
    return tuned

"""Accuracy, confusion matrices, and attack success rates."""

from dataclasses import dataclass

import numpy as np

from .data.blend import apply_mask
from .nn.model import NetworkModel, forward

__all__ = [
    "predict_batch",
    "accuracy",
    "confusion_matrix",
    "per_class_precision_recall",
    "attack_success_rate",
    "asr_both_variants",
    "EvalResult",
    "evaluate",
]


def _as_xy(data):
    if hasattr(data, "as_float"):
        return data.as_float()
    x, y = data
    return np.asarray(x), np.asarray(y).reshape(-1)


def predict_batch(model: NetworkModel, images, batch_size: int = 512) -> np.ndarray:
    out = np.empty(len(images), dtype=np.int64)
    for lo in range(0, len(images), batch_size):
        xb = np.asarray(images[lo : lo + batch_size], dtype=model.dtype)
        out[lo : lo + len(xb)] = forward(model, xb).argmax(axis=1)
    return out


def accuracy(model: NetworkModel, data) -> float:
    x, y = _as_xy(data)
    return float((predict_batch(model, x) == y).mean())


def confusion_matrix(y_true, y_pred, class_count: int) -> np.ndarray:
    """Rows are true labels, columns predictions."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    flat = y_true * class_count + y_pred
    return np.bincount(flat, minlength=class_count * class_count).reshape(class_count, class_count)


def per_class_precision_recall(cm: np.ndarray):
    diag = np.diag(cm).astype(np.float64)
    col = cm.sum(axis=0).astype(np.float64)
    row = cm.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(col > 0, diag / col, 0.0)
        recall = np.where(row > 0, diag / row, 0.0)
    return precision, recall


def attack_success_rate(model: NetworkModel, data, mask, target=None) -> float:
    """Success rate of a mask (or planted trigger expressed as one).

    Targeted variant (``target`` given): fraction of masked images predicted
    as the target among images whose true label differs from it. General
    variant: fraction of masked images predicted as anything but their true
    label. Returns 0.0 when no image is eligible.
    """
    x, y = _as_xy(data)
    if len(x) == 0:
        return 0.0
    preds = predict_batch(model, apply_mask(x, mask))
    if target is None:
        return float((preds != y).mean())
    eligible = y != target
    if not eligible.any():
        return 0.0
    return float((preds[eligible] == target).mean())


def asr_both_variants(model, data, mask, target):
    return {
        "targeted": attack_success_rate(model, data, mask, target=target),
        "any_misclassification": attack_success_rate(model, data, mask, target=None),
    }


@dataclass
class EvalResult:
    dataset_id: str
    accuracy: float
    asr_targeted: float  # NaN when no mask was evaluated
    asr_any: float
    precision: list
    recall: list
    confusion: list

    def to_dict(self):
        return {
            "dataset_id": self.dataset_id,
            "accuracy": round(self.accuracy, 6),
            "asr_targeted": None if np.isnan(self.asr_targeted) else round(self.asr_targeted, 6),
            "asr_any": None if np.isnan(self.asr_any) else round(self.asr_any, 6),
            "per_class_precision": [round(v, 6) for v in self.precision],
            "per_class_recall": [round(v, 6) for v in self.recall],
            "confusion": self.confusion,
        }


def evaluate(model: NetworkModel, data, dataset_id: str, mask=None, target=None) -> EvalResult:
    x, y = _as_xy(data)
    preds = predict_batch(model, x)
    cm = confusion_matrix(y, preds, model.label_count)
    precision, recall = per_class_precision_recall(cm)
    asr_t = asr_any = float("nan")
    if mask is not None:
        asr_any = attack_success_rate(model, (x, y), mask, target=None)
        if target is not None:
            asr_t = attack_success_rate(model, (x, y), mask, target=target)
    return EvalResult(
        dataset_id=dataset_id,
        accuracy=float((preds == y).mean()),
        asr_targeted=asr_t,
        asr_any=asr_any,
        precision=[float(v) for v in precision],
        recall=[float(v) for v in recall],
        confusion=[[int(v) for v in row] for row in cm],
    )

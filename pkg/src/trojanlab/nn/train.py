"""Mini-batch SGD with momentum."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError
from ..seeding import make_rng
from .gradients import _loss_grads_scores, cross_entropy
from .model import NetworkModel, forward


@dataclass
class Hyperparams:
    epochs: int = 15
    batch_size: int = 64
    learning_rate: float = 0.02
    momentum: float = 0.9
    lr_decay: float = 1.0  # multiplies the learning rate after each epoch
    shuffle: bool = True
    seed: int = 0


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)
    valid_accuracy: list = field(default_factory=list)


def _as_xy(data):
    if hasattr(data, "as_float"):
        return data.as_float()
    x, y = data
    return np.asarray(x), np.asarray(y).reshape(-1)


def _batched_eval(model, x, y, batch_size=256):
    losses, hits, n = 0.0, 0, len(x)
    for lo in range(0, n, batch_size):
        xb = x[lo : lo + batch_size].astype(model.dtype)
        yb = y[lo : lo + batch_size]
        scores = forward(model, xb)
        losses += cross_entropy(scores, yb) * len(xb)
        hits += int((scores.argmax(axis=1) == yb).sum())
    return losses / n, hits / n


def train(model: NetworkModel, train_data, hyper: Hyperparams, valid_data=None):
    """Train in place; returns ``(model, history)``.

    The trajectory is fully determined by the model's initial weights and
    ``hyper.seed``. Zero epochs or a zero learning rate leave the weights
    bit-identical. Per-epoch train accuracy is the running estimate from the
    pre-update forward passes; validation metrics come from a clean pass.
    """
    x, y = _as_xy(train_data)
    if len(x) == 0:
        raise ValueError("cannot train on an empty dataset")
    if y.min() < 0 or y.max() >= model.label_count:
        raise ValueError(
            f"labels must lie in [0, {model.label_count}), got range [{y.min()}, {y.max()}]"
        )
    valid_xy = _as_xy(valid_data) if valid_data is not None else None

    history = TrainingHistory()
    rng = make_rng(hyper.seed, "shuffle")
    velocity = [None if wb is None else (np.zeros_like(wb[0]), np.zeros_like(wb[1])) for wb in model.weights]
    lr = float(hyper.learning_rate)
    mom = model.dtype.type(hyper.momentum)

    for epoch in range(hyper.epochs):
        order = rng.permutation(len(x)) if hyper.shuffle else np.arange(len(x))
        epoch_loss, epoch_hits = 0.0, 0
        lr_t = model.dtype.type(lr)
        for step, lo in enumerate(range(0, len(x), hyper.batch_size)):
            idx = order[lo : lo + hyper.batch_size]
            xb = x[idx].astype(model.dtype)
            yb = y[idx]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads, _, scores = _loss_grads_scores(model, xb, yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch=epoch, step=step)
            epoch_loss += loss * len(idx)
            epoch_hits += int((scores.argmax(axis=1) == yb).sum())
            for li, gw in enumerate(grads):
                if gw is None:
                    continue
                vw, vb = velocity[li]
                w, b = model.weights[li]
                vw *= mom
                vw -= lr_t * gw[0]
                vb *= mom
                vb -= lr_t * gw[1]
                w += vw
                b += vb
        history.train_loss.append(epoch_loss / len(x))
        history.train_accuracy.append(epoch_hits / len(x))
        if valid_xy is not None:
            v_loss, v_acc = _batched_eval(model, *valid_xy)
            history.valid_loss.append(v_loss)
            history.valid_accuracy.append(v_acc)
        lr *= hyper.lr_decay
    return model, history

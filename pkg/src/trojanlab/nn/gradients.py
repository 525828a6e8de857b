"""Backpropagation: cross-entropy gradients and per-unit input gradients."""

import numpy as np

from .layers import conv_backward, conv_forward, dense_forward
from .model import NetworkModel, NeuronRef, check_neuron


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(scores: np.ndarray, labels: np.ndarray) -> float:
    shifted = scores - scores.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(logz - shifted[np.arange(len(labels)), labels]))


class _Cache:
    __slots__ = ("x_in", "cols", "u", "in_shape")

    def __init__(self, x_in=None, cols=None, u=None, in_shape=None):
        self.x_in = x_in
        self.cols = cols
        self.u = u
        self.in_shape = in_shape


def _forward_caches(model: NetworkModel, x, upto=None):
    """Forward pass keeping what the backward pass needs, through layer ``upto``."""
    stop = model.num_layers - 1 if upto is None else upto
    last = model.num_layers - 1
    caches = []
    v = x
    for idx in range(stop + 1):
        spec = model.specs[idx]
        if spec.kind == "conv2d":
            u, cols = conv_forward(v, model.plans[idx], *model.weights[idx], want_cols=True)
            caches.append(_Cache(cols=cols, u=u))
        elif spec.kind == "dense":
            u = dense_forward(v, *model.weights[idx])
            caches.append(_Cache(x_in=v, u=u))
        else:
            u = v.reshape(v.shape[0], -1)
            caches.append(_Cache(in_shape=v.shape))
        v = np.maximum(u, 0) if (idx < last and spec.kind != "flatten") else u
    return caches, v


def _backward(model: NetworkModel, caches, grad, start, grad_is_preact, want_weight_grads):
    """Walk gradients from layer ``start`` down to the input.

    ``grad`` is d(loss)/d(pre-activation) of layer ``start`` when
    ``grad_is_preact`` else d(loss)/d(post-activation).
    """
    weight_grads = [None] * model.num_layers if want_weight_grads else None
    g = grad
    for idx in range(start, -1, -1):
        spec = model.specs[idx]
        if spec.kind != "flatten" and not (idx == start and grad_is_preact):
            g = g * (caches[idx].u > 0)
        if spec.kind == "conv2d":
            dw, db, g = conv_backward(g, caches[idx].cols, model.plans[idx], model.weights[idx][0])
            if want_weight_grads:
                weight_grads[idx] = (dw, db)
        elif spec.kind == "dense":
            dw = caches[idx].x_in.T @ g
            db = g.sum(axis=0)
            g = g @ model.weights[idx][0].T
            if want_weight_grads:
                weight_grads[idx] = (dw, db)
        else:
            g = g.reshape(caches[idx].in_shape)
    return weight_grads, g


def _loss_grads_scores(model: NetworkModel, images, labels):
    x = np.asarray(images, dtype=model.dtype)
    if x.ndim == len(model.input_shape):
        x = x[None]
    y = np.asarray(labels).reshape(-1)
    if len(x) == 0:
        raise ValueError("gradient evaluation needs a non-empty batch")
    if x.shape[1:] != model.input_shape or len(y) != len(x):
        from ..errors import ShapeMismatchError

        raise ShapeMismatchError(
            f"batch shape {x.shape} / labels {y.shape} do not match model input {model.input_shape}"
        )
    caches, scores = _forward_caches(model, x)
    loss = cross_entropy(scores, y)
    d_scores = softmax(scores)
    d_scores[np.arange(len(y)), y] -= 1.0
    d_scores /= len(y)
    d_scores = d_scores.astype(model.dtype)
    weight_grads, d_input = _backward(
        model, caches, d_scores, model.num_layers - 1, grad_is_preact=True, want_weight_grads=True
    )
    return loss, weight_grads, d_input, scores


def loss_and_gradients(model: NetworkModel, images, labels):
    """Mean cross-entropy loss plus gradients w.r.t. every weight and the input.

    Returns ``(loss, weight_grads, input_grad)`` where ``weight_grads`` mirrors
    ``model.weights`` (``None`` for flatten) and ``input_grad`` has the shape of
    the input batch. Duplicating a sample leaves the mean gradient unchanged.
    """
    loss, weight_grads, d_input, _ = _loss_grads_scores(model, images, labels)
    return loss, weight_grads, d_input


def unit_preactivation(model: NetworkModel, images, neuron: NeuronRef):
    """Per-sample pre-activation of one unit: the spatial max for conv channels."""
    check_neuron(model, neuron)
    x = np.asarray(images, dtype=model.dtype)
    caches, _ = _forward_caches(model, x, upto=neuron.layer)
    u = caches[neuron.layer].u
    if model.specs[neuron.layer].kind == "conv2d":
        return u[..., neuron.unit].reshape(len(x), -1).max(axis=1)
    return u[:, neuron.unit].copy()


def unit_objective_grad(model: NetworkModel, images, neuron: NeuronRef, z_target: float):
    """Gradient of ``mean((unit_preactivation - z_target)^2)`` w.r.t. the input batch.

    Drives the unit's pre-activation toward ``z_target``; for z >= 0 this is
    equivalent to steering the post-ReLU value, but keeps a live gradient when
    the unit is currently off. Returns ``(objective, values, input_grad)``.
    """
    check_neuron(model, neuron)
    x = np.asarray(images, dtype=model.dtype)
    n = len(x)
    caches, _ = _forward_caches(model, x, upto=neuron.layer)
    u = caches[neuron.layer].u
    spec = model.specs[neuron.layer]
    g_u = np.zeros_like(u)
    if spec.kind == "conv2d":
        chan = u[..., neuron.unit].reshape(n, -1)
        flat_pos = chan.argmax(axis=1)
        values = chan[np.arange(n), flat_pos]
        d_vals = 2.0 * (values - z_target) / n
        hw = u.shape[1] * u.shape[2]
        g_chan = np.zeros((n, hw), dtype=model.dtype)
        g_chan[np.arange(n), flat_pos] = d_vals.astype(model.dtype)
        g_u[..., neuron.unit] = g_chan.reshape(n, u.shape[1], u.shape[2])
    else:
        values = u[:, neuron.unit]
        g_u[:, neuron.unit] = (2.0 * (values - z_target) / n).astype(model.dtype)
    objective = float(np.mean((values - z_target) ** 2))
    _, d_input = _backward(model, caches, g_u, neuron.layer, grad_is_preact=True, want_weight_grads=False)
    return objective, values, d_input

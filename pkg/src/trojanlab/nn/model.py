"""Layered feed-forward classifier with a per-unit activation-override hook.

The network is a single chain: the input feeds layer 0, each layer feeds the
next, and the last layer (always dense) emits raw per-class scores. Every
hidden conv/dense layer is followed by ReLU; the output layer has no
activation and labels are the argmax over raw scores. Stimulation analysis
overrides one hidden unit's post-activation value: for conv layers the unit
of override is one output channel (the whole feature map is set to the
replacement value), for dense layers a single neuron.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError
from .layers import LayerSpec, build_conv_plan, conv_forward, dense_forward

__all__ = [
    "NetworkModel",
    "NeuronRef",
    "ActivationOverride",
    "forward",
    "predict",
    "forward_with_override",
    "forward_trace",
    "forward_from",
    "hidden_units",
    "count_parameters",
]


@dataclass(frozen=True)
class NeuronRef:
    """A hidden unit: ``layer`` indexes the layer chain, ``unit`` the channel/neuron."""

    layer: int
    unit: int


@dataclass(frozen=True)
class ActivationOverride:
    """Replace one hidden unit's post-activation value with ``value`` (>= 0)."""

    target: NeuronRef
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError(f"override replaces a post-ReLU value and must be >= 0, got {self.value}")


class NetworkModel:
    def __init__(self, input_shape, specs, dtype=np.float32, init_seed: int = 0):
        input_shape = tuple(int(d) for d in input_shape)
        if len(input_shape) not in (1, 3):
            raise ValueError(f"input shape must be (features,) or (H, W, C), got {input_shape}")
        if not specs:
            raise ValueError("a model needs at least one layer")
        if specs[-1].kind != "dense":
            raise ValueError("the output layer must be dense")
        self.input_shape = input_shape
        self.specs = list(specs)
        self.dtype = np.dtype(dtype)
        self.plans = []
        self.out_shapes = []
        self._chain_shapes()
        self.weights = None
        self.init_weights(init_seed)

    def _chain_shapes(self):
        shape = self.input_shape
        for spec in self.specs:
            if spec.kind == "conv2d":
                if len(shape) != 3:
                    raise ValueError(f"conv2d needs a (H, W, C) input, got {shape}")
                plan = build_conv_plan(shape, spec)
                self.plans.append(plan)
                shape = plan.out_shape
            elif spec.kind == "flatten":
                self.plans.append(None)
                shape = (int(np.prod(shape)),)
            else:
                if len(shape) != 1:
                    raise ValueError(f"dense needs a flat input, got {shape}; add a flatten layer")
                self.plans.append(None)
                shape = (spec.units,)
            self.out_shapes.append(shape)

    @property
    def label_count(self) -> int:
        return self.specs[-1].units

    @property
    def num_layers(self) -> int:
        return len(self.specs)

    def init_weights(self, seed: int):
        """He-normal init for hidden layers, scaled-normal for the output layer."""
        gen = np.random.Generator(np.random.PCG64(int(seed)))
        weights = []
        shape = self.input_shape
        last = len(self.specs) - 1
        for idx, spec in enumerate(self.specs):
            if spec.kind == "conv2d":
                cin = shape[2]
                fan_in = spec.kernel * spec.kernel * cin
                std = np.sqrt((2.0 if idx < last else 1.0) / fan_in)
                w = gen.normal(0.0, std, size=(spec.kernel, spec.kernel, cin, spec.units))
                b = np.zeros(spec.units)
                weights.append((w.astype(self.dtype), b.astype(self.dtype)))
            elif spec.kind == "dense":
                fan_in = shape[0]
                std = np.sqrt((2.0 if idx < last else 1.0) / fan_in)
                w = gen.normal(0.0, std, size=(fan_in, spec.units))
                b = np.zeros(spec.units)
                weights.append((w.astype(self.dtype), b.astype(self.dtype)))
            else:
                weights.append(None)
            shape = self.out_shapes[idx]
        self.weights = weights

    def copy(self) -> "NetworkModel":
        dup = NetworkModel.__new__(NetworkModel)
        dup.input_shape = self.input_shape
        dup.specs = list(self.specs)
        dup.dtype = self.dtype
        dup.plans = self.plans
        dup.out_shapes = self.out_shapes
        dup.weights = [None if wb is None else (wb[0].copy(), wb[1].copy()) for wb in self.weights]
        return dup

    def astype(self, dtype) -> "NetworkModel":
        dup = self.copy()
        dup.dtype = np.dtype(dtype)
        dup.weights = [
            None if wb is None else (wb[0].astype(dtype), wb[1].astype(dtype)) for wb in dup.weights
        ]
        return dup


def count_parameters(model: NetworkModel) -> int:
    return sum(w.size + b.size for wb in model.weights if wb is not None for w, b in [wb])


def hidden_units(model: NetworkModel):
    """All stimulable units: every channel/neuron of conv/dense layers except the output."""
    refs = []
    for idx, spec in enumerate(model.specs[:-1]):
        if spec.kind in ("conv2d", "dense"):
            refs.extend(NeuronRef(idx, u) for u in range(spec.units))
    return refs


def check_neuron(model: NetworkModel, neuron: NeuronRef):
    if not 0 <= neuron.layer < model.num_layers - 1:
        raise ValueError(
            f"neuron layer {neuron.layer} is not a hidden layer (model has "
            f"{model.num_layers} layers; the last one is the output)"
        )
    spec = model.specs[neuron.layer]
    if spec.kind == "flatten":
        raise ValueError("flatten layers have no stimulable units")
    if not 0 <= neuron.unit < spec.units:
        raise ValueError(f"unit {neuron.unit} out of range for layer {neuron.layer} with {spec.units} units")


def _as_batch(model: NetworkModel, x):
    x = np.asarray(x, dtype=model.dtype)
    if x.shape == model.input_shape:
        return x[None], True
    if x.shape[1:] == model.input_shape:
        return x, False
    raise ShapeMismatchError(
        f"input shape {x.shape} does not match model input {model.input_shape} "
        f"(or a batch thereof)"
    )


def _apply_override(v, spec, unit, value, dtype):
    if spec.kind == "conv2d":
        v[..., unit] = dtype.type(value)
    else:
        v[:, unit] = dtype.type(value)


def _run_chain(model, v, start, override=None, trace=None):
    last = model.num_layers - 1
    for idx in range(start, model.num_layers):
        spec = model.specs[idx]
        if spec.kind == "conv2d":
            u, _ = conv_forward(v, model.plans[idx], *model.weights[idx])
        elif spec.kind == "dense":
            u = dense_forward(v, *model.weights[idx])
        else:
            u = v.reshape(v.shape[0], -1)
        if idx < last and spec.kind != "flatten":
            v = np.maximum(u, 0)
        else:
            v = u
        if override is not None and override.target.layer == idx:
            v = v.copy() if spec.kind == "flatten" else v
            _apply_override(v, spec, override.target.unit, override.value, model.dtype)
        if trace is not None:
            trace.append(v)
    return v


def forward(model: NetworkModel, image) -> np.ndarray:
    """Raw per-class score vector(s) for one image or a batch."""
    x, single = _as_batch(model, image)
    scores = _run_chain(model, x, 0)
    return scores[0] if single else scores


def predict(model: NetworkModel, image):
    """Argmax label(s); ties break toward the lowest class index."""
    scores = forward(model, image)
    return int(np.argmax(scores)) if scores.ndim == 1 else np.argmax(scores, axis=1)


def forward_with_override(model: NetworkModel, image, override: ActivationOverride) -> np.ndarray:
    """Like :func:`forward`, but one hidden unit's post-activation is pinned.

    Other units in the overridden layer keep their computed values; downstream
    layers are recomputed from the modified activations.
    """
    check_neuron(model, override.target)
    x, single = _as_batch(model, image)
    scores = _run_chain(model, x, 0, override=override)
    return scores[0] if single else scores


def forward_trace(model: NetworkModel, image, override=None):
    """Per-layer post-activation arrays (batched); the last entry is the scores."""
    if override is not None:
        check_neuron(model, override.target)
    x, _ = _as_batch(model, image)
    trace = []
    _run_chain(model, x, 0, override=override, trace=trace)
    return trace


def forward_from(model: NetworkModel, activations, start_layer: int) -> np.ndarray:
    """Resume the chain from cached post-activations of layer ``start_layer - 1``."""
    if not 0 < start_layer <= model.num_layers:
        raise ValueError(f"start_layer {start_layer} out of range")
    if start_layer == model.num_layers:
        return activations
    return _run_chain(model, np.asarray(activations, dtype=model.dtype), start_layer)

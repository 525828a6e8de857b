from .layers import LayerSpec
from .model import (
    ActivationOverride,
    NetworkModel,
    NeuronRef,
    count_parameters,
    forward,
    forward_from,
    forward_trace,
    forward_with_override,
    hidden_units,
    predict,
)
from .gradients import loss_and_gradients, unit_objective_grad, unit_preactivation
from .train import Hyperparams, TrainingHistory, train
from .checkpoint import load_checkpoint, save_checkpoint
from .presets import build_preset, preset_names

__all__ = [
    "LayerSpec",
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
    "loss_and_gradients",
    "unit_objective_grad",
    "unit_preactivation",
    "Hyperparams",
    "TrainingHistory",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "build_preset",
    "preset_names",
]

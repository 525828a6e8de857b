"""Ready-made architectures.

The three ``*43`` presets are the signage-scale family: 5x5 convolutions with
stride 3 and same padding shrink a 32x32 input to 1x1 before the dense head,
giving 30203 / 130091 / 516139 trainable parameters for the small / medium /
large variants. ``desk10`` is the default bench model for the 10-class
synthetic set; stride 2 keeps a little more spatial detail.
"""

import numpy as np

from .layers import LayerSpec
from .model import NetworkModel


def _conv_stack(channels, classes, kernel, stride):
    specs = [LayerSpec("conv2d", units=c, kernel=kernel, stride=stride, padding="same") for c in channels]
    specs.append(LayerSpec("flatten"))
    specs.append(LayerSpec("dense", units=classes))
    return specs


_PRESETS = {
    "desk10": lambda: _conv_stack([8, 16, 32, 16], classes=10, kernel=5, stride=2),
    "small43": lambda: _conv_stack([8, 16, 32, 16], classes=43, kernel=5, stride=3),
    "medium43": lambda: _conv_stack([16, 32, 64, 32, 16], classes=43, kernel=5, stride=3),
    "large43": lambda: _conv_stack([32, 64, 128, 64, 32], classes=43, kernel=5, stride=3),
}


def preset_names():
    return sorted(_PRESETS)


def build_preset(name: str, input_shape=(32, 32, 3), dtype=np.float32, init_seed: int = 0) -> NetworkModel:
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {preset_names()}")
    return NetworkModel(input_shape, _PRESETS[name](), dtype=dtype, init_seed=init_seed)

import numpy as np
import pytest

from trojanlab.nn import LayerSpec, NetworkModel


def make_mlp_222(dtype=np.float32):
    """2-2-2 MLP with hand-set weights.

    Hidden: identity weights, zero bias, ReLU. Output unit o receives
    1*h1 + 2*h2 (o=0) and 3*h1 + 4*h2 (o=1); weight matrices are stored
    input-major, so the output matrix is the transpose of those rows.
    """
    model = NetworkModel((2,), [LayerSpec("dense", units=2), LayerSpec("dense", units=2)], dtype=dtype)
    w1 = np.eye(2, dtype=dtype)
    b1 = np.zeros(2, dtype=dtype)
    w2 = np.array([[1.0, 3.0], [2.0, 4.0]], dtype=dtype)
    b2 = np.zeros(2, dtype=dtype)
    model.weights = [(w1, b1), (w2, b2)]
    return model


@pytest.fixture
def mlp222():
    return make_mlp_222()


def random_small_model(seed, dtype=np.float64):
    """A tiny conv+dense model with random weights, for gradient checks."""
    rng = np.random.default_rng(seed)
    specs = [
        LayerSpec("conv2d", units=3, kernel=3, stride=2, padding="same"),
        LayerSpec("conv2d", units=4, kernel=3, stride=1, padding="valid"),
        LayerSpec("flatten"),
        LayerSpec("dense", units=5),
        LayerSpec("dense", units=4),
    ]
    model = NetworkModel((7, 7, 2), specs, dtype=dtype, init_seed=seed)
    # re-randomize biases so they participate in the check
    for wb in model.weights:
        if wb is not None:
            wb[1][...] = rng.normal(0, 0.1, size=wb[1].shape)
    return model

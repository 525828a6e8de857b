import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trojanlab.errors import ShapeMismatchError
from trojanlab.nn import (
    ActivationOverride,
    LayerSpec,
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

from conftest import make_mlp_222, random_small_model


def test_single_dense_identity_layer():
    model = NetworkModel((2,), [LayerSpec("dense", units=2)])
    model.weights = [(np.eye(2, dtype=np.float32), np.zeros(2, dtype=np.float32))]
    np.testing.assert_allclose(forward(model, np.array([3.0, -1.0])), [3.0, -1.0])


def test_mlp222_forward_matches_hand_computation(mlp222):
    # straight-line oracle: h = relu([1, -2]) = [1, 0]; scores = [1*1+2*0, 3*1+4*0]
    scores = forward(mlp222, np.array([1.0, -2.0]))
    np.testing.assert_allclose(scores, [1.0, 3.0])


def test_zero_weights_give_zero_scores():
    model = NetworkModel((4, 4, 1), [LayerSpec("conv2d", units=2, kernel=3), LayerSpec("flatten"), LayerSpec("dense", units=3)])
    model.weights = [None if wb is None else (np.zeros_like(wb[0]), np.zeros_like(wb[1])) for wb in model.weights]
    x = np.random.default_rng(0).random((4, 4, 1)).astype(np.float32)
    np.testing.assert_array_equal(forward(model, x), np.zeros(3))


def test_forward_rejects_shape_mismatch(mlp222):
    with pytest.raises(ShapeMismatchError, match="does not match"):
        forward(mlp222, np.zeros(3))


def test_predict_argmax_and_tiebreak(mlp222):
    assert predict(mlp222, np.array([1.0, -2.0])) == 1
    scores = np.array([0.1, 0.9, 0.3])
    assert int(np.argmax(scores)) == 1  # sanity on the convention
    flat = NetworkModel((2,), [LayerSpec("dense", units=3)])
    flat.weights = [(np.zeros((2, 3), dtype=np.float32), np.zeros(3, dtype=np.float32))]
    assert predict(flat, np.array([1.0, 1.0])) == 0  # all-equal scores -> lowest index


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_predict_total_on_random_inputs(seed):
    rng = np.random.default_rng(seed)
    model = make_mlp_222()
    label = predict(model, rng.normal(size=2))
    assert label in (0, 1)


def test_override_matches_hand_computation(mlp222):
    over = ActivationOverride(NeuronRef(layer=0, unit=1), 5.0)
    scores = forward_with_override(mlp222, np.array([1.0, -2.0]), over)
    np.testing.assert_allclose(scores, [11.0, 23.0])


def test_override_noop_when_value_equals_natural(mlp222):
    x = np.array([1.0, -2.0])
    natural = forward_trace(mlp222, x)[0][0]  # hidden activations [1, 0]
    for unit in range(2):
        over = ActivationOverride(NeuronRef(0, unit), float(natural[unit]))
        np.testing.assert_array_equal(forward_with_override(mlp222, x, over), forward(mlp222, x))


def test_override_zero_on_dead_conv_channel_is_noop():
    model = random_small_model(3, dtype=np.float32)
    # silence channel 1 of the first conv so its natural activation map is 0
    w, b = model.weights[0]
    w[..., 1] = -1.0
    b[1] = -5.0
    x = np.random.default_rng(5).random((7, 7, 2)).astype(np.float32)
    over = ActivationOverride(NeuronRef(0, 1), 0.0)
    np.testing.assert_array_equal(forward_with_override(model, x, over), forward(model, x))


def test_override_rejects_output_and_flatten_layers(mlp222):
    with pytest.raises(ValueError, match="hidden"):
        forward_with_override(mlp222, np.zeros(2), ActivationOverride(NeuronRef(1, 0), 1.0))
    model = random_small_model(0, dtype=np.float32)
    with pytest.raises(ValueError, match="flatten"):
        forward_with_override(
            model, np.zeros((7, 7, 2), dtype=np.float32), ActivationOverride(NeuronRef(2, 0), 1.0)
        )


def test_override_value_must_be_nonnegative():
    with pytest.raises(ValueError, match=">= 0"):
        ActivationOverride(NeuronRef(0, 0), -0.5)


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_relu_nonnegativity_property(seed):
    model = random_small_model(seed % 7, dtype=np.float32)
    x = np.random.default_rng(seed).random((2, 7, 7, 2)).astype(np.float32)
    trace = forward_trace(model, x)
    for v in trace[:-1]:
        assert (v >= 0).all()


@given(st.integers(0, 10**6), st.floats(0.0, 4.0))
@settings(max_examples=20, deadline=None)
def test_override_locality_property(seed, z):
    """Only the overridden unit and downstream layers may change."""
    model = random_small_model(seed % 5, dtype=np.float32)
    x = np.random.default_rng(seed).random((7, 7, 2)).astype(np.float32)
    target = NeuronRef(1, int(seed) % 4)
    base = forward_trace(model, x)
    patched = forward_trace(model, x, override=ActivationOverride(target, float(z)))
    for idx in range(target.layer):
        np.testing.assert_array_equal(base[idx], patched[idx])
    same_layer_base = np.delete(base[target.layer], target.unit, axis=-1)
    same_layer_patched = np.delete(patched[target.layer], target.unit, axis=-1)
    np.testing.assert_array_equal(same_layer_base, same_layer_patched)
    assert (patched[target.layer][..., target.unit] == model.dtype.type(z)).all()


def test_forward_from_resumes_chain(mlp222):
    x = np.array([[1.0, -2.0]], dtype=np.float32)
    trace = forward_trace(mlp222, x)
    np.testing.assert_array_equal(forward_from(mlp222, trace[0], 1), trace[-1])


def test_hidden_units_enumeration():
    model = random_small_model(0)
    refs = hidden_units(model)
    # conv(3) + conv(4) + dense(5); flatten and the output layer contribute none
    assert len(refs) == 12
    assert refs[0] == NeuronRef(0, 0) and refs[-1] == NeuronRef(3, 4)


def test_count_parameters_known_value():
    model = NetworkModel((2,), [LayerSpec("dense", units=3), LayerSpec("dense", units=2)])
    assert count_parameters(model) == (2 * 3 + 3) + (3 * 2 + 2)


def test_conv_kernel_must_be_odd():
    with pytest.raises(ValueError, match="odd"):
        LayerSpec("conv2d", units=4, kernel=4)

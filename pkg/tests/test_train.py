import numpy as np
import pytest

from trojanlab.errors import TrainingDivergedError
from trojanlab.nn import Hyperparams, LayerSpec, NetworkModel, train


def two_blobs(n=200, seed=0):
    """Two well-separated Gaussian blobs; linearly separable by construction."""
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = rng.normal([-2.0, -2.0], 0.5, size=(half, 2))
    x1 = rng.normal([2.0, 2.0], 0.5, size=(n - half, 2))
    x = np.concatenate([x0, x1]).astype(np.float32)
    y = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(n - half, dtype=np.int64)])
    return x, y


def blob_model(seed=0):
    return NetworkModel((2,), [LayerSpec("dense", units=8), LayerSpec("dense", units=2)], init_seed=seed)


def test_blobs_train_to_99_percent_within_50_epochs():
    x, y = two_blobs()
    model, history = train(blob_model(), (x, y), Hyperparams(epochs=50, batch_size=32, learning_rate=0.1, seed=1))
    assert max(history.train_accuracy) >= 0.99


def test_zero_epochs_leave_weights_bit_identical():
    x, y = two_blobs()
    model = blob_model()
    before = [(w.copy(), b.copy()) for w, b in model.weights]
    train(model, (x, y), Hyperparams(epochs=0))
    for (w0, b0), (w1, b1) in zip(before, model.weights):
        np.testing.assert_array_equal(w0, w1)
        np.testing.assert_array_equal(b0, b1)


def test_zero_learning_rate_leaves_weights_unchanged():
    x, y = two_blobs()
    model = blob_model()
    before = [(w.copy(), b.copy()) for w, b in model.weights]
    train(model, (x, y), Hyperparams(epochs=3, learning_rate=0.0, seed=2))
    for (w0, b0), (w1, b1) in zip(before, model.weights):
        np.testing.assert_array_equal(w0, w1)
        np.testing.assert_array_equal(b0, b1)


def test_training_is_deterministic_for_fixed_seed():
    x, y = two_blobs()
    m1, h1 = train(blob_model(seed=4), (x, y), Hyperparams(epochs=5, seed=9))
    m2, h2 = train(blob_model(seed=4), (x, y), Hyperparams(epochs=5, seed=9))
    assert h1.train_loss == h2.train_loss
    for a, b in zip(m1.weights, m2.weights):
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


def test_empty_dataset_rejected():
    with pytest.raises(ValueError, match="empty"):
        train(blob_model(), (np.zeros((0, 2), dtype=np.float32), np.zeros(0, dtype=np.int64)), Hyperparams())


def test_out_of_range_labels_rejected():
    x, y = two_blobs()
    with pytest.raises(ValueError, match="labels"):
        train(blob_model(), (x, y + 5), Hyperparams())


def test_divergence_reports_epoch_index():
    x, y = two_blobs()
    with pytest.raises(TrainingDivergedError, match="epoch 0") as err:
        train(blob_model(), (x * 1e4, y), Hyperparams(epochs=2, learning_rate=1e6, seed=0))
    assert err.value.epoch == 0


def test_validation_history_recorded():
    x, y = two_blobs()
    _, history = train(blob_model(), (x, y), Hyperparams(epochs=3, seed=0), valid_data=(x[:40], y[:40]))
    assert len(history.valid_accuracy) == 3
    assert len(history.train_loss) == 3

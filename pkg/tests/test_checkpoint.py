import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trojanlab.errors import CheckpointFormatError
from trojanlab.nn import (
    LayerSpec,
    NetworkModel,
    build_preset,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
)


def test_save_load_save_is_byte_identical(tmp_path):
    model = build_preset("desk10", init_seed=3)
    p1, p2 = tmp_path / "a.tjf", tmp_path / "b.tjf"
    save_checkpoint(model, p1)
    save_checkpoint(load_checkpoint(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_roundtrip_weights_bit_identical(tmp_path):
    model = build_preset("desk10", init_seed=1)
    path = tmp_path / "m.tjf"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    for a, b in zip(model.weights, loaded.weights):
        if a is None:
            assert b is None
            continue
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


def test_truncated_payload_reports_expected_vs_actual(tmp_path):
    model = build_preset("desk10")
    path = tmp_path / "m.tjf"
    save_checkpoint(model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-100])
    with pytest.raises(CheckpointFormatError, match=r"declares \d+ values, file carries \d+"):
        load_checkpoint(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.tjf"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointFormatError, match="magic"):
        load_checkpoint(path)


def test_version_mismatch_rejected(tmp_path):
    model = build_preset("desk10")
    path = tmp_path / "m.tjf"
    save_checkpoint(model, path)
    blob = bytearray(path.read_bytes())
    blob[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointFormatError, match="version 99"):
        load_checkpoint(path)


@pytest.mark.parametrize(
    "name,expected",
    [("small43", 30203), ("medium43", 130091), ("large43", 516139)],
)
def test_signage_presets_hit_published_parameter_counts(name, expected, tmp_path):
    model = build_preset(name)
    assert count_parameters(model) == expected
    path = tmp_path / "m.tjf"
    save_checkpoint(model, path)
    assert count_parameters(load_checkpoint(path)) == expected


@given(widths=st.lists(st.integers(1, 6), min_size=1, max_size=3), seed=st.integers(0, 2**16))
@settings(max_examples=15, deadline=None)
def test_roundtrip_property_over_random_dense_stacks(tmp_path_factory, widths, seed):
    specs = [LayerSpec("dense", units=w) for w in widths] + [LayerSpec("dense", units=3)]
    model = NetworkModel((4,), specs, init_seed=seed)
    path = tmp_path_factory.mktemp("ckpt") / "m.tjf"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.input_shape == model.input_shape
    assert loaded.specs == model.specs
    for a, b in zip(model.weights, loaded.weights):
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

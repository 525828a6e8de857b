import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trojanlab.data import (
    DatasetBundle,
    LabeledDataset,
    SynthSpec,
    TrojanSpec,
    generate,
    poison,
    poison_count,
    stamp_patch,
    trigger_mask,
)
from trojanlab.data.blend import BlendMask, apply_mask
from trojanlab.errors import DatasetFormatError, ShapeMismatchError
from trojanlab.data import load_dataset, save_dataset

SMALL = SynthSpec(train_size=60, valid_size=20, test_size=20, seed_size=10)


@pytest.fixture(scope="module")
def small_bundle():
    return generate(SMALL, seed=123)


def test_seed_split_covers_every_class_once(small_bundle):
    assert sorted(small_bundle.seed.labels.tolist()) == list(range(10))


def test_generation_is_deterministic():
    a = generate(SMALL, seed=9)
    b = generate(SMALL, seed=9)
    for split, ds in a.splits().items():
        np.testing.assert_array_equal(ds.images, b.splits()[split].images)
        np.testing.assert_array_equal(ds.labels, b.splits()[split].labels)


def test_splits_are_disjoint_by_image_bytes(small_bundle):
    seen = set()
    for ds in small_bundle.splits().values():
        hashes = ds.image_hashes()
        assert len(hashes) == len(ds)
        assert not (seen & hashes)
        seen |= hashes


def test_seed_split_smaller_than_class_count_rejected():
    with pytest.raises(ValueError, match="one image per class"):
        SynthSpec(seed_size=9)


def test_signage_scale_split_geometry_accepted():
    spec = SynthSpec(class_count=43, train_size=35228, valid_size=4410, test_size=12630, seed_size=43)
    bundle = generate(spec, seed=0)
    assert [len(bundle.train), len(bundle.valid), len(bundle.test), len(bundle.seed)] == [
        35228,
        4410,
        12630,
        43,
    ]
    assert sorted(bundle.seed.labels.tolist()) == list(range(43))


def test_poison_counts_are_exact(small_bundle):
    spec = TrojanSpec(poison_fraction=0.2, target_class=3)
    poisoned = poison(small_bundle.train, spec, seed=5)
    assert poisoned.poisoned_count() == poison_count(0.2, len(poisoned)) == 12
    flagged = poisoned.provenance == 1
    assert (poisoned.labels[flagged] == 3).all()
    # unflagged images untouched
    np.testing.assert_array_equal(poisoned.images[~flagged], small_bundle.train.images[~flagged])


def test_poison_fraction_one_relabels_everything(small_bundle):
    poisoned = poison(small_bundle.train, TrojanSpec(poison_fraction=1.0, target_class=7), seed=1)
    assert (poisoned.labels == 7).all()
    assert poisoned.poisoned_count() == len(poisoned)


def test_poison_is_deterministic(small_bundle):
    spec = TrojanSpec(poison_fraction=0.25, target_class=2)
    a = poison(small_bundle.train, spec, seed=11)
    b = poison(small_bundle.train, spec, seed=11)
    np.testing.assert_array_equal(a.images, b.images)
    np.testing.assert_array_equal(a.provenance, b.provenance)


def test_poison_rejects_empty_selection(small_bundle):
    tiny = small_bundle.train.subset(np.arange(2))
    with pytest.raises(ValueError, match="nothing to poison"):
        poison(tiny, TrojanSpec(poison_fraction=0.1), seed=0)


def test_poison_rejects_test_split(small_bundle):
    with pytest.raises(ValueError, match="train/valid"):
        poison(small_bundle.test, TrojanSpec(), seed=0)


def test_patch_must_fit_inside_image():
    with pytest.raises(ValueError, match="bounds"):
        TrojanSpec(position=(30, 30), size=4).check_fits(32, 32)


def test_stamp_patch_writes_color():
    img = np.zeros((8, 8, 3), dtype=np.uint8)
    out = stamp_patch(img, TrojanSpec(color=(255, 255, 0), size=2, position=(1, 1), jitter=0))
    assert (out[1:3, 1:3] == np.array([255, 255, 0], dtype=np.uint8)).all()
    assert out[0].sum() == 0 and img.sum() == 0


def test_trigger_mask_equals_stamp_in_float_space():
    img = np.random.default_rng(0).integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    spec = TrojanSpec(color=(255, 200, 0), size=3, position=(2, 2), jitter=0)
    stamped = stamp_patch(img, spec).astype(np.float32) / 255.0
    blended = apply_mask(img.astype(np.float32) / 255.0, trigger_mask(spec, (8, 8, 3)))
    np.testing.assert_allclose(blended, stamped, atol=1e-7)


def test_apply_mask_identity_and_full_replacement():
    rng = np.random.default_rng(4)
    img = rng.random((6, 6, 3)).astype(np.float32)
    pattern = rng.random((6, 6, 3)).astype(np.float32)
    zero = BlendMask(pattern, np.zeros_like(pattern))
    one = BlendMask(pattern, np.ones_like(pattern))
    np.testing.assert_array_equal(apply_mask(img, zero), img)
    np.testing.assert_allclose(apply_mask(img, one), pattern, atol=1e-7)


def test_apply_mask_half_blend_closed_form():
    img = np.full((4, 4, 3), 0.2, dtype=np.float32)
    pattern = np.full((4, 4, 3), 0.8, dtype=np.float32)
    mask = BlendMask(pattern, np.full((4, 4, 3), 0.5, dtype=np.float32))
    np.testing.assert_allclose(apply_mask(img, mask), np.full((4, 4, 3), 0.5), atol=1e-7)


def test_apply_mask_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        apply_mask(np.zeros((4, 4, 3)), BlendMask(np.zeros((5, 5, 3)), np.zeros((5, 5, 3))))


@given(a1=st.floats(0, 1), a2=st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_larger_alpha_moves_output_toward_pattern(a1, a2):
    lo, hi = min(a1, a2), max(a1, a2)
    rng = np.random.default_rng(7)
    img = rng.random((3, 3, 3)).astype(np.float64)
    pattern = rng.random((3, 3, 3)).astype(np.float64)
    out_lo = apply_mask(img, BlendMask(pattern, np.full_like(pattern, lo)))
    out_hi = apply_mask(img, BlendMask(pattern, np.full_like(pattern, hi)))
    assert (np.abs(out_hi - pattern) <= np.abs(out_lo - pattern) + 1e-12).all()


def test_dataset_roundtrip_byte_identical(tmp_path, small_bundle):
    poisoned = poison(small_bundle.train, TrojanSpec(poison_fraction=0.2, target_class=1), seed=3)
    p1, p2 = tmp_path / "a.tjd", tmp_path / "b.tjd"
    save_dataset(poisoned, p1)
    loaded = load_dataset(p1)
    save_dataset(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(loaded.images, poisoned.images)
    np.testing.assert_array_equal(loaded.labels, poisoned.labels)
    np.testing.assert_array_equal(loaded.provenance, poisoned.provenance)
    assert loaded.split == "train" and loaded.class_count == 10


def test_dataset_wrong_magic_rejected(tmp_path):
    path = tmp_path / "bad.tjd"
    path.write_bytes(b"XXXX" + b"\x00" * 40)
    with pytest.raises(DatasetFormatError, match="magic"):
        load_dataset(path)


def test_dataset_truncation_rejected(tmp_path, small_bundle):
    path = tmp_path / "t.tjd"
    save_dataset(small_bundle.seed, path)
    path.write_bytes(path.read_bytes()[:-7])
    with pytest.raises(DatasetFormatError, match="length mismatch"):
        load_dataset(path)


def test_provenance_bitmap_survives_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(1000, 8, 8, 3), dtype=np.uint8)
    labels = rng.integers(0, 5, size=1000)
    provenance = np.zeros(1000, dtype=np.uint8)
    provenance[rng.choice(1000, 200, replace=False)] = 1
    ds = LabeledDataset(images, labels, 5, "train", provenance)
    path = tmp_path / "p.tjd"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded.poisoned_count() == 200
    np.testing.assert_array_equal(loaded.provenance, provenance)


def test_import_image_folder_roundtrip(tmp_path):
    PIL = pytest.importorskip("PIL.Image")
    rng = np.random.default_rng(1)
    for cls in ("alpha", "beta"):
        d = tmp_path / "imgs" / cls
        d.mkdir(parents=True)
        for i in range(3):
            arr = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
            PIL.fromarray(arr).save(d / f"{i}.png")
    ds = __import__("trojanlab.data", fromlist=["import_image_folder"]).import_image_folder(
        tmp_path / "imgs", split="test", geometry=(32, 32, 3)
    )
    assert len(ds) == 6 and ds.class_count == 2
    assert ds.geometry == (32, 32, 3)
    assert sorted(set(ds.labels.tolist())) == [0, 1]

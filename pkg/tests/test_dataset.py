import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ahcr.dataset import (CLASS_GLYPHS, CLASS_IDS, CLASS_NAMES, DataFormatError, Glyphs, class_name,
                          load_csv, load_split, resize_to_64, save_split, synth_dataset)


def write_rows(path, rows):
    np.savetxt(path, np.atleast_2d(rows), fmt="%d", delimiter=",")


def test_catalog():
    assert len(CLASS_NAMES) == 28 and len(set(CLASS_GLYPHS)) == 28
    assert CLASS_IDS["alef"] == 1 and CLASS_IDS["yaa"] == 28
    assert class_name(23) == "lam"
    with pytest.raises(ValueError):
        class_name(29)


def test_zero_32x32_rows_become_zero_64x64(tmp_path):
    write_rows(tmp_path / "x.csv", np.zeros((3, 1024)))
    write_rows(tmp_path / "y.csv", [[1], [2], [28]])
    g = load_csv(tmp_path / "x.csv", tmp_path / "y.csv")
    assert g.images.shape == (3, 64, 64) and g.images.dtype == np.float32
    assert not g.images.any()
    assert g.labels.tolist() == [1, 2, 28]


def test_64x64_rows_load_without_resampling(tmp_path):
    rng = np.random.default_rng(0)
    pix = rng.integers(0, 256, size=(2, 4096))
    write_rows(tmp_path / "x.csv", pix)
    write_rows(tmp_path / "y.csv", [[5], [6]])
    g = load_csv(tmp_path / "x.csv", tmp_path / "y.csv")
    np.testing.assert_array_equal(g.images, (pix / 255.0).reshape(2, 64, 64).astype(np.float32))
    inv = load_csv(tmp_path / "x.csv", tmp_path / "y.csv", invert=True)
    np.testing.assert_allclose(inv.images, 1 - g.images, atol=1e-6)


@pytest.mark.parametrize("pixels,labels,match", [
    (np.zeros((1, 1000)), [[1]], "perfect square"),
    (np.full((1, 1024), 256), [[1]], "outside"),
    (np.zeros((1, 1024)), [[0]], "labels"),
    (np.zeros((1, 1024)), [[29]], "labels"),
    (np.zeros((2, 1024)), [[1]], "labels"),
])
def test_format_errors(tmp_path, pixels, labels, match):
    write_rows(tmp_path / "x.csv", pixels)
    write_rows(tmp_path / "y.csv", labels)
    with pytest.raises(DataFormatError, match=match):
        load_csv(tmp_path / "x.csv", tmp_path / "y.csv")


def test_unparseable_file(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n")
    write_rows(tmp_path / "y.csv", [[1]])
    with pytest.raises(DataFormatError):
        load_csv(tmp_path / "x.csv", tmp_path / "y.csv")


def test_glyphs_validation():
    with pytest.raises(DataFormatError):
        Glyphs(np.zeros((2, 32, 32)), [1, 2])
    with pytest.raises(DataFormatError):
        Glyphs(np.zeros((2, 64, 64)), [1])


def test_resize_constant_and_identity():
    np.testing.assert_array_equal(resize_to_64(np.full((32, 32), 0.25)), np.full((64, 64), 0.25))
    img = np.random.default_rng(1).random((64, 64))
    np.testing.assert_array_equal(resize_to_64(img), img)


def test_resize_2x2_ramp():
    out = resize_to_64(np.array([[0.0, 1.0], [0.0, 1.0]]))
    np.testing.assert_allclose(out[0], np.arange(64) / 63, atol=1e-12)
    assert np.all(np.diff(out, axis=1) > 0)
    np.testing.assert_array_equal(out, np.tile(out[0], (64, 1)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**31 - 1))
def test_resize_corners_and_range(side, seed):
    img = np.random.default_rng(seed).random((side, side))
    out = resize_to_64(img)
    assert out.shape == (64, 64)
    assert img.min() <= out.min() and out.max() <= img.max()
    for (r, c), (R, C) in [((0, 0), (0, 0)), ((0, -1), (0, -1)), ((-1, 0), (-1, 0)), ((-1, -1), (-1, -1))]:
        assert out[R, C] == pytest.approx(img[r, c], abs=1e-12)


def test_resize_rejects_bad_shapes():
    with pytest.raises(ValueError):
        resize_to_64(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        resize_to_64(np.zeros((1, 1)))


def test_split_round_trip(tmp_path):
    split = synth_dataset(seed=3, n_per_class=3)
    save_split(split, tmp_path)
    back = load_split(tmp_path)
    np.testing.assert_array_equal(back.train.images, split.train.images)
    np.testing.assert_array_equal(back.test.labels, split.test.labels)


def test_synth_dataset_shape_and_determinism():
    a = synth_dataset(seed=7, n_per_class=10)
    b = synth_dataset(seed=7, n_per_class=10)
    assert a.train.images.tobytes() == b.train.images.tobytes()
    assert (a.train.counts() == 8).all() and (a.test.counts() == 2).all()
    assert 0 <= a.train.images.min() and a.train.images.max() <= 1
    c = synth_dataset(seed=8, n_per_class=10)
    assert a.train.images.tobytes() != c.train.images.tobytes()
    with pytest.raises(ValueError):
        synth_dataset(seed=0, n_per_class=1)


def test_release_file_names_are_found(tmp_path):
    split = synth_dataset(seed=4, n_per_class=2)
    save_split(split, tmp_path / "plain")
    for part, (img, lab) in {"train": ("csvTrainImages 13440x1024.csv", "csvTrainLabel 13440x1.csv"),
                             "test": ("csvTestImages 3360x1024.csv", "csvTestLabel 3360x1.csv")}.items():
        (tmp_path / "plain" / f"{part}_images.csv").rename(tmp_path / "plain" / img)
        (tmp_path / "plain" / f"{part}_labels.csv").rename(tmp_path / "plain" / lab)
    back = load_split(tmp_path / "plain")
    np.testing.assert_array_equal(back.test.images, split.test.images)

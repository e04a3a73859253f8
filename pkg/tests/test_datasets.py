import gzip
import hashlib
import json
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from t3cen.colorspace import TWO_PI, hsl_to_rgb_array, rgb_to_hsl_array
from t3cen.datasets import (
    DEFAULT_MNIST_DIR, SHAPE_CLASSES, IdxParseError, LabeledImageSet, ShiftSpec, apply_shift_hsl, colorize_hue_shift,
    generate_shapes, hue_shift_mnist, mnist_gray_set, parse_idx, read_idx, read_idx_images, read_idx_labels,
    read_manifest, render_shape_hsl, image_rng, shapes_splits, write_idx, write_manifest,
)
from t3cen.groups import act_hsl_arrays


def _idx_bytes(type_code, dims, payload):
    return bytes([0, 0, type_code, len(dims)]) + struct.pack(f">{len(dims)}I", *dims) + payload


@pytest.fixture
def digits():
    """Four 28x28 images with a deterministic byte pattern."""
    pix = (np.arange(4 * 28 * 28) * 37 % 256).astype(np.uint8)
    return pix.tobytes()


def test_idx_fixture_exact(tmp_path, digits):
    p = tmp_path / "img.idx"
    p.write_bytes(_idx_bytes(0x08, (4, 28, 28), digits))
    arr = read_idx_images(p)
    assert arr.shape == (4, 28, 28) and arr.dtype == np.uint8
    assert hashlib.sha256(arr.tobytes()).hexdigest() == hashlib.sha256(digits).hexdigest()
    assert [int(a.sum()) for a in arr] == [sum(digits[i * 784 : (i + 1) * 784]) for i in range(4)]


def test_idx_labels_and_gzip(tmp_path):
    p = tmp_path / "lab.idx.gz"
    with gzip.open(p, "wb") as fh:
        fh.write(_idx_bytes(0x08, (5,), bytes([3, 1, 4, 1, 5])))
    np.testing.assert_array_equal(read_idx_labels(p), [3, 1, 4, 1, 5])


@pytest.mark.parametrize("dtype", [np.uint8, np.int8, ">i2", ">i4", ">f4", ">f8"])
def test_write_idx_round_trip(tmp_path, rng, dtype):
    arr = (rng.normal(size=(3, 2, 5)) * 20).astype(dtype)
    write_idx(tmp_path / "a.idx", arr)
    back = read_idx(tmp_path / "a.idx")
    np.testing.assert_array_equal(back, arr)


@pytest.mark.parametrize(
    # truncation errors point at the end of the data, overflow at the offending dimension
    "buf, offset, message",
    [
        (b"", 0, "truncated"),
        (b"\x00\x00\x08\x01\x00\x00", 6, "truncated"),
        (_idx_bytes(0x08, (3,), b"\x01\x02"), 10, "truncated"),
        (_idx_bytes(0x08, (2,), b"\x01\x02\x03"), 10, "trailing"),
        (_idx_bytes(0x07, (1,), b"\x01"), 2, "type"),
        (b"\x01\x00\x08\x01" + struct.pack(">I", 1) + b"\x00", 0, "magic"),
        (_idx_bytes(0x08, (1 << 16, 1 << 16, 1 << 16), b""), 12, "overflow"),
    ],
)
def test_idx_errors_name_offsets(buf, offset, message):
    with pytest.raises(IdxParseError) as exc:
        parse_idx(buf)
    assert exc.value.offset == offset
    assert f"byte {offset}" in str(exc.value) and message in str(exc.value)


def test_label_file_on_image_reader(tmp_path):
    p = tmp_path / "lab.idx"
    p.write_bytes(_idx_bytes(0x08, (2,), b"\x01\x02"))
    with pytest.raises(IdxParseError, match="magic mismatch"):
        read_idx_images(p)


def test_labeled_set_validation():
    with pytest.raises(ValueError):
        LabeledImageSet(np.zeros((2, 3, 2, 2)), np.array([0]))
    with pytest.raises(ValueError):
        LabeledImageSet(np.zeros((1, 3, 2, 2)), np.array([10]))


def _gray(n=6, seed=0):
    rng = np.random.default_rng(seed)
    return mnist_gray_set(rng.integers(0, 256, (n, 28, 28), dtype=np.uint8), np.arange(n) % 10)


def test_colorize_red_and_black():
    gray = _gray()
    gray.images[:, :, :3, :3] = 0.0
    out = colorize_hue_shift(gray, ShiftSpec("hue", "range", (0.0, 0.0), 0))
    # hue 0 with s = 1: only the red channel is lit
    assert np.all(out.images[:, 1:] == 0.0)
    np.testing.assert_allclose(out.images[:, 0], gray.images[:, 0], atol=1e-12)
    assert np.all(out.images[:, :, :3, :3] == 0.0)


def test_colorize_deterministic_and_in_range():
    shift_spec = ShiftSpec("hue", "range", (120.0, 360.0), 7)
    a = colorize_hue_shift(_gray(), shift_spec)
    b = colorize_hue_shift(_gray(), shift_spec)
    assert a.images.tobytes() == b.images.tobytes()
    hsl = rgb_to_hsl_array(a.images)
    lit = hsl[:, 1] > 0.5
    hue_deg = np.rad2deg(hsl[:, 0][lit])
    assert hue_deg.min() >= 120.0 - 1e-6
    np.testing.assert_array_equal(a.labels, _gray().labels)


def test_hue_shift_mnist_splits():
    sets = hue_shift_mnist(test_count=50)
    assert set(sets) == {"train", "test", "test-id"}
    assert len(sets["test"]) == len(sets["test-id"]) == 50
    assert len(sets["train"]) + 50 == 5000
    np.testing.assert_array_equal(sets["test"].labels, sets["test-id"].labels)
    assert sets["test-id"].split == "test-id"
    src = read_idx_labels(DEFAULT_MNIST_DIR / "labels-idx1-ubyte.gz")
    merged = np.concatenate([sets["train"].labels, sets["test"].labels])
    np.testing.assert_array_equal(np.bincount(merged, minlength=10), np.bincount(src, minlength=10))


def test_shift_spec_sampling(rng):
    assert np.all(ShiftSpec("sat", "fixed", (0.25,)).sample(4, rng) == 0.25)
    m = ShiftSpec("sat", "multiples", (0.125,)).sample(200, rng)
    np.testing.assert_allclose(np.mod(m, 0.125), 0.0, atol=1e-12)
    assert m.min() >= 0 and m.max() < 1.0
    r = ShiftSpec("hue", "random", ()).sample(200, rng)
    assert r.min() >= 0 and r.max() < 360
    with pytest.raises(ValueError):
        ShiftSpec("hue", "range", (200.0, 400.0))
    with pytest.raises(ValueError):
        ShiftSpec("chroma")


def test_shapes_deterministic():
    a = generate_shapes(6, seed=3, size=32)
    b = generate_shapes(6, seed=3, size=32)
    assert a.images.tobytes() == b.images.tobytes()
    assert a.provenance["config_hash"] == b.provenance["config_hash"]
    assert a.classes == SHAPE_CLASSES and a.images.shape == (6, 3, 32, 32)
    c = generate_shapes(6, seed=4, size=32)
    assert a.images.tobytes() != c.images.tobytes()
    with pytest.raises(ValueError):
        generate_shapes(0)


def test_shapes_order_independent():
    """Image i depends only on (seed, i)."""
    full = generate_shapes(5, seed=11, size=24)
    part = generate_shapes(3, seed=11, size=24)
    np.testing.assert_array_equal(full.images[:3], part.images)


@given(value=st.integers(0, 7), axis=st.sampled_from(["sat", "lum"]), seed=st.integers(0, 1000))
def test_shift_commutes_with_generation(value, axis, seed):
    """Generating with an exact group-element shift equals acting on the generated image."""
    shift = value * 0.125
    shift_spec = ShiftSpec(axis, "fixed", (shift,), seed)
    shifted = generate_shapes(2, shift_spec, seed=seed, size=16).hsl()
    # act on the rendered HSL (before the RGB round trip) to avoid achromatic hue loss
    for i in range(2):
        r = image_rng(seed, i)
        label = int(r.integers(len(SHAPE_CLASSES)))
        raw = render_shape_hsl(label, r, 16)
        acted, _ = apply_shift_hsl(raw, axis, shift)
        np.testing.assert_allclose(hsl_to_rgb_array(rgb_to_hsl_array(hsl_to_rgb_array(acted))),
                                   hsl_to_rgb_array(shifted[i]), atol=1e-9)


def test_hue_split_pools():
    splits = shapes_splits("hue-abc", 4, seed=1, size=32)
    assert set(splits) == {"A", "B", "C"}
    warm = {round(TWO_PI * k / 10, 9) for k in range(5)}
    hues_a = {round(h, 9) for h in np.unique(rgb_to_hsl_array(splits["A"].images)[:, 0])}
    assert len(hues_a) > 1 and all(any(abs(h - w) < 1e-6 for w in warm) for h in hues_a)
    sat = shapes_splits("sat-abc", 3, size=16)
    assert sat["B"].provenance["shift"]["parameters"] == (0.125,)
    assert set(shapes_splits("hsl", 2, size=16)) == {"A", "B"}
    with pytest.raises(ValueError):
        shapes_splits("norb", 2)


def test_manifest_round_trip(tmp_path):
    ds = generate_shapes(4, seed=2, size=12)
    path = write_manifest(ds, tmp_path / "d")
    man = json.loads(path.read_text())
    assert man["version"] == 1 and len(man["items"]) == 4 and man["seed"] == 2
    assert man["items"][0]["file"] == "images/00000.ppm"
    back = read_manifest(tmp_path / "d")
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.images, np.rint(ds.images * 255) / 255)
    # re-writing the read-back set is byte identical
    path2 = write_manifest(back, tmp_path / "e")
    assert json.loads(path2.read_text())["content_hash"] == man["content_hash"]


def test_manifest_empty_set(tmp_path):
    ds = LabeledImageSet(np.zeros((0, 3, 4, 4)), np.zeros(0, dtype=int), SHAPE_CLASSES)
    man = json.loads(write_manifest(ds, tmp_path).read_text())
    assert man["items"] == [] and list((tmp_path / "images").iterdir()) == []


def test_manifest_hash_tracks_pixels(tmp_path):
    ds = generate_shapes(3, seed=5, size=10)
    h0 = json.loads(write_manifest(ds, tmp_path / "a").read_text())["content_hash"]
    same = json.loads(write_manifest(ds, tmp_path / "b").read_text())["content_hash"]
    ds.images[1, 2, 3, 4] = 1.0 - ds.images[1, 2, 3, 4]
    h1 = json.loads(write_manifest(ds, tmp_path / "c").read_text())["content_hash"]
    assert h0 == same != h1


def test_manifest_checksum_verification(tmp_path):
    ds = generate_shapes(2, seed=1, size=8)
    write_manifest(ds, tmp_path)
    f = tmp_path / "images" / "00001.ppm"
    raw = bytearray(f.read_bytes())
    raw[-1] ^= 0xFF
    f.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        read_manifest(tmp_path)
    assert len(read_manifest(tmp_path, verify=False)) == 2


def test_apply_shift_hue_and_clip():
    hsl = np.stack([np.full((2, 2), 0.1), np.full((2, 2), 0.9), np.full((2, 2), 0.5)])
    out, _ = apply_shift_hsl(hsl, "hue", 180.0)
    np.testing.assert_allclose(out[0], 0.1 + np.pi)
    out, ph = apply_shift_hsl(hsl, "sat", 0.5, action="clip")
    assert ph is None and np.all(out[1] == 1.0)
    cover, _ = act_hsl_arrays(hsl, None, (0.0, np.pi * 0.5, 0.0))
    np.testing.assert_allclose(apply_shift_hsl(hsl, "sat", 0.5)[0], cover)

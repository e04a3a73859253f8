"""Dataset ingestion and generation: IDX files, hue-shift MNIST, procedural shapes, manifests."""

from __future__ import annotations

import gzip
import hashlib
import json
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .colorspace import TWO_PI, RgbImage, hsl_to_rgb_array, quantize, read_ppm, rgb_to_hsl_array, write_ppm
from .groups import act_hsl_arrays, interval_shift_to_angle

MANIFEST_VERSION = 1
SHAPE_CLASSES = ("square", "circle", "triangle")
DIGIT_CLASSES = tuple(str(d) for d in range(10))

# ten evenly spaced hues as in 3D Shapes; indices 0-4 are warm, 5-9 cold
HUE_POOLS = {"warm": tuple(range(0, 5)), "cold": tuple(range(5, 10)), "all": tuple(range(10))}


class IdxParseError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


# --- IDX -----------------------------------------------------------------------

IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
_MAX_ELEMENTS = 1 << 40


def _read_bytes(path) -> bytes:
    opener = gzip.open if os.fspath(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def parse_idx(buf: bytes, expect_magic: Optional[int] = None) -> np.ndarray:
    if len(buf) < 4:
        raise IdxParseError(len(buf) if buf else 0, "truncated magic number")
    (magic,) = struct.unpack(">I", buf[:4])
    if expect_magic is not None and magic != expect_magic:
        raise IdxParseError(0, f"magic mismatch: expected 0x{expect_magic:08x}, found 0x{magic:08x}")
    if buf[0] != 0 or buf[1] != 0:
        raise IdxParseError(0, f"magic mismatch: leading bytes must be zero, found 0x{magic:08x}")
    dtype = IDX_TYPES.get(buf[2])
    if dtype is None:
        raise IdxParseError(2, f"unknown element type 0x{buf[2]:02x}")
    ndim = buf[3]
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise IdxParseError(len(buf), f"truncated dimension list ({ndim} dims expected)")
    dims = struct.unpack(f">{ndim}I", buf[4:header])
    count = 1
    for i, d in enumerate(dims):
        count *= d
        if count > _MAX_ELEMENTS:
            raise IdxParseError(4 + 4 * i, "dimension overflow")
    expected = count * dtype.itemsize
    payload = len(buf) - header
    if payload < expected:
        raise IdxParseError(len(buf), f"truncated payload: {payload} of {expected} bytes")
    if payload > expected:
        raise IdxParseError(header + expected, f"{payload - expected} trailing bytes after payload")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=header).reshape(dims)
    return arr.astype(dtype.newbyteorder("="))


def read_idx(path, expect_magic: Optional[int] = None) -> np.ndarray:
    """Parse a big-endian IDX file (optionally gzip-compressed, by ``.gz`` suffix)."""
    try:
        return parse_idx(_read_bytes(path), expect_magic)
    except IdxParseError as exc:
        raise IdxParseError(exc.offset, f"{os.fspath(path)}: {exc.args[0].split(': ', 1)[1]}") from None


def read_idx_images(path) -> np.ndarray:
    return read_idx(path, IMAGE_MAGIC)


def read_idx_labels(path) -> np.ndarray:
    return read_idx(path, LABEL_MAGIC)


def write_idx(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    codes = {v.newbyteorder("="): k for k, v in IDX_TYPES.items()}
    code = codes.get(array.dtype.newbyteorder("="))
    if code is None:
        raise TypeError(f"dtype {array.dtype} has no IDX type code")
    header = struct.pack(">BBBB", 0, 0, code, array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    body = array.astype(IDX_TYPES[code]).tobytes()
    opener = gzip.open if os.fspath(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(header + body)


# --- containers --------------------------------------------------------------------


@dataclass
class LabeledImageSet:
    """Planar RGB images ``(n, 3, H, W)`` in [0, 1] with integer labels.

    Grayscale sets (input to :func:`colorize_hue_shift`) use one channel.
    """

    images: np.ndarray
    labels: np.ndarray
    classes: tuple = DIGIT_CLASSES
    split: str = "train"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.classes)):
            raise ValueError("label outside the declared classes")

    def __len__(self) -> int:
        return len(self.labels)

    def image(self, i: int) -> RgbImage:
        return RgbImage(self.images[i])

    def hsl(self) -> np.ndarray:
        return rgb_to_hsl_array(self.images)

    def subset(self, idx) -> "LabeledImageSet":
        return LabeledImageSet(self.images[idx], self.labels[idx], self.classes, self.split, dict(self.provenance))

    def class_histogram(self) -> dict:
        counts = np.bincount(self.labels, minlength=len(self.classes))
        return {c: int(n) for c, n in zip(self.classes, counts)}


@dataclass(frozen=True)
class ShiftSpec:
    """How colors are shifted or assigned.

    ``axis`` is hue / sat / lum. Hue values are degrees; saturation and
    luminance values are interval shifts. Modes:
      fixed      parameters = (value,)       same value for every image
      range      parameters = (lo, hi)       uniform per image in [lo, hi)
      multiples  parameters = (step,)        per image a random multiple of step
      random     parameters = ()             uniform over the whole axis
    ``action`` selects the double cover (``cover``) or clipped translation (``clip``)
    for saturation / luminance shifts.
    """

    axis: str = "hue"
    mode: str = "fixed"
    parameters: tuple = (0.0,)
    seed: int = 0
    action: str = "cover"

    def __post_init__(self):
        if self.axis not in ("hue", "sat", "lum"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.mode not in ("fixed", "range", "multiples", "random"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.action not in ("cover", "clip"):
            raise ValueError(f"unknown action {self.action!r}")
        object.__setattr__(self, "parameters", tuple(float(p) for p in self.parameters))
        if self.axis == "hue" and self.mode == "range":
            lo, hi = self.parameters
            if not (0.0 <= lo <= hi <= 360.0):
                raise ValueError("hue range must lie in [0, 360]")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Per-image values (degrees for hue, interval units otherwise)."""
        full = 360.0 if self.axis == "hue" else 1.0
        if self.mode == "fixed":
            return np.full(n, self.parameters[0])
        if self.mode == "range":
            lo, hi = self.parameters
            return rng.uniform(lo, hi, n) if hi > lo else np.full(n, lo)
        if self.mode == "multiples":
            (step,) = self.parameters
            return step * rng.integers(0, int(round(full / step)), n)
        return rng.uniform(0.0, full, n)


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def image_rng(seed: int, i: int) -> np.random.Generator:
    """Independent per-image stream, so images can be generated in any order."""
    return np.random.default_rng(np.random.SeedSequence([seed, i]))


# --- hue-shift MNIST -----------------------------------------------------------------


def mnist_gray_set(images: np.ndarray, labels: np.ndarray, split: str = "train") -> LabeledImageSet:
    """Wrap uint8 IDX arrays (n, 28, 28) as a one-channel set in [0, 1]."""
    gray = np.asarray(images, dtype=np.float64)[:, None] / 255.0
    return LabeledImageSet(gray, labels, DIGIT_CLASSES, split, {"source": "idx"})


def colorize_hue_shift(gray: LabeledImageSet, shift_spec: ShiftSpec) -> LabeledImageSet:
    """Color every digit with one hue drawn from ``shift_spec``: (h, s = 1, l = gray / 2)."""
    if gray.images.shape[1] != 1:
        raise ValueError("colorize_hue_shift expects a one-channel set")
    rng = np.random.default_rng(shift_spec.seed)
    hues = np.deg2rad(shift_spec.sample(len(gray), rng))
    g = gray.images[:, 0]
    hsl = np.stack([np.broadcast_to(np.mod(hues, TWO_PI)[:, None, None], g.shape), np.ones_like(g), 0.5 * g], axis=1)
    prov = dict(gray.provenance, colorize=asdict(shift_spec))
    prov["config_hash"] = config_hash(prov)
    return LabeledImageSet(hsl_to_rgb_array(hsl), gray.labels.copy(), gray.classes, gray.split, prov)


DEFAULT_MNIST_DIR = Path(__file__).resolve().parents[2] / "data" / "mnist5k"


def hue_shift_mnist(images_path=None, labels_path=None, test_count: Optional[int] = None,
                    train_range=(0.0, 120.0), test_range=(120.0, 360.0), seed: int = 0) -> dict:
    """Train / OOD-test / in-distribution-test splits of hue-shift MNIST.

    Digits are split once by a seeded permutation; the held-out digits are
    colored twice, with test-range hues (``test``) and train-range hues
    (``test-id``). Defaults read the bundled 5000-digit sample.
    """
    images_path = images_path or DEFAULT_MNIST_DIR / "images-idx3-ubyte.gz"
    labels_path = labels_path or DEFAULT_MNIST_DIR / "labels-idx1-ubyte.gz"
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise ValueError(f"{len(images)} images but {len(labels)} labels")
    perm = np.random.default_rng(seed).permutation(len(labels))
    n_test = test_count if test_count else len(labels) // 5
    te, tr = perm[:n_test], perm[n_test:]
    gray_tr = mnist_gray_set(images[tr], labels[tr], "train")
    gray_te = mnist_gray_set(images[te], labels[te], "test")
    sets = {
        "train": colorize_hue_shift(gray_tr, ShiftSpec("hue", "range", tuple(train_range), seed + 1)),
        "test": colorize_hue_shift(gray_te, ShiftSpec("hue", "range", tuple(test_range), seed + 2)),
        "test-id": colorize_hue_shift(gray_te, ShiftSpec("hue", "range", tuple(train_range), seed + 3)),
    }
    for name, ds in sets.items():
        ds.split = name
    return sets


# --- procedural shapes -----------------------------------------------------------------


def _shape_mask(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    half = rng.uniform(0.14, 0.24) * size
    cx = rng.uniform(0.3, 0.7) * size
    cy = rng.uniform(0.45, 0.7) * size
    if kind == 0:
        return (np.abs(xx - cx) <= half) & (np.abs(yy - cy) <= half)
    if kind == 1:
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= half**2
    # upright isosceles triangle
    top, base = cy - half, cy + half
    t = (yy - top) / (2 * half)
    return (yy >= top) & (yy <= base) & (np.abs(xx - cx) <= t * half)


def apply_shift_hsl(hsl: np.ndarray, axis: str, value: float, action: str = "cover", phase=None):
    """Shift one channel of an HSL image by ``value`` (degrees for hue, interval units otherwise)."""
    if axis == "hue":
        return act_hsl_arrays(hsl, phase, (np.deg2rad(value), 0.0, 0.0))
    if action == "clip":
        out = hsl.copy()
        ch = 1 if axis == "sat" else 2
        out[ch] = np.clip(out[ch] + value, 0.0, 1.0)
        return out, None
    angle = interval_shift_to_angle(value)
    angles = (0.0, angle, 0.0) if axis == "sat" else (0.0, 0.0, angle)
    return act_hsl_arrays(hsl, phase, angles)


def render_shape_hsl(label: int, rng: np.random.Generator, size: int = 64,
                     pools=("warm", "warm", "warm")) -> np.ndarray:
    """HSL image of one shape: object / floor / wall hues from the named pools."""
    obj_pool, floor_pool, wall_pool = (HUE_POOLS[p] for p in pools)
    hue_of = lambda pool: TWO_PI * pool[rng.integers(len(pool))] / 10.0  # noqa: E731
    h_obj, h_floor, h_wall = hue_of(obj_pool), hue_of(floor_pool), hue_of(wall_pool)
    horizon = int(round(rng.uniform(0.45, 0.6) * size))
    rows = np.arange(size)[:, None] * np.ones((1, size))
    floor = rows >= horizon
    hue = np.where(floor, h_floor, h_wall)
    sat = np.where(floor, 0.7, 0.8)
    # the floor darkens towards the horizon
    lum = np.where(floor, 0.35 + 0.2 * (rows - horizon) / max(size - horizon, 1), 0.6)
    mask = _shape_mask(label, size, rng)
    hue = np.where(mask, h_obj, hue)
    sat = np.where(mask, 0.9, sat)
    lum = np.where(mask, 0.5, lum)
    return np.stack([hue, sat, lum])


def generate_shapes(count: int, shift_spec: Optional[ShiftSpec] = None, seed: int = 0, size: int = 64,
                    pools=("warm", "warm", "warm"), split: str = "train") -> LabeledImageSet:
    """Shapes on a floor/wall scene; the class is the shape.

    Every image is a pure function of (seed, index, shift_spec); ``shift_spec`` shifts the
    rendered image with the chosen group action.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    images = np.empty((count, 3, size, size))
    labels = np.empty(count, dtype=np.int64)
    shifts = np.zeros(count)
    if shift_spec is not None:
        shifts = shift_spec.sample(count, np.random.default_rng(np.random.SeedSequence([seed, shift_spec.seed, 1 << 20])))
    for i in range(count):
        rng = image_rng(seed, i)
        labels[i] = rng.integers(len(SHAPE_CLASSES))
        hsl = render_shape_hsl(int(labels[i]), rng, size, pools)
        if shift_spec is not None:
            hsl, _ = apply_shift_hsl(hsl, shift_spec.axis, float(shifts[i]), shift_spec.action)
        images[i] = hsl_to_rgb_array(hsl)
    prov = {"generator": "shapes", "seed": seed, "size": size, "pools": list(pools),
            "shift": None if shift_spec is None else asdict(shift_spec)}
    prov["config_hash"] = config_hash(prov)
    return LabeledImageSet(images, labels, SHAPE_CLASSES, split, prov)


SPLITS = ("hue-abc", "sat-abc", "hsl")


def shapes_splits(name: str, count: int, seed: int = 0, size: int = 64) -> dict:
    """Train/OOD split families of the shapes surrogate.

    hue-abc: A all warm, B all cold, C warm floor/wall with a cold object.
    sat-abc: A original, B saturation shifted by multiples of 0.125, C random shifts.
    hsl:     A original, B random shifts on all three axes.
    """
    if name == "hue-abc":
        return {
            "A": generate_shapes(count, None, seed, size, ("warm", "warm", "warm"), "A"),
            "B": generate_shapes(count, None, seed + 1, size, ("cold", "cold", "cold"), "B"),
            "C": generate_shapes(count, None, seed + 2, size, ("cold", "warm", "warm"), "C"),
        }
    if name == "sat-abc":
        return {
            "A": generate_shapes(count, None, seed, size, ("all",) * 3, "A"),
            "B": generate_shapes(count, ShiftSpec("sat", "multiples", (0.125,), seed), seed + 1, size, ("all",) * 3, "B"),
            "C": generate_shapes(count, ShiftSpec("sat", "random", (), seed), seed + 2, size, ("all",) * 3, "C"),
        }
    if name == "hsl":
        base = generate_shapes(count, None, seed + 1, size, ("all",) * 3, "B")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
        hsl = base.hsl()
        angles = rng.uniform(0.0, TWO_PI, (count, 3))
        shifted, _ = act_hsl_arrays(hsl, None, (angles[:, 0], angles[:, 1], angles[:, 2]))
        prov = dict(base.provenance, hsl_shift="random", shift_seed=seed)
        prov["config_hash"] = config_hash(prov)
        b = LabeledImageSet(hsl_to_rgb_array(shifted), base.labels, SHAPE_CLASSES, "B", prov)
        return {"A": generate_shapes(count, None, seed, size, ("all",) * 3, "A"), "B": b}
    raise ValueError(f"unknown split {name!r}; choose from {SPLITS}")


# --- manifests -----------------------------------------------------------------------------


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_manifest(dataset: LabeledImageSet, directory) -> Path:
    """Write images as zero-padded PPM files plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    try:
        (directory / "images").mkdir(parents=True, exist_ok=True)
        items = []
        width = max(5, len(str(len(dataset))))
        for i in range(len(dataset)):
            name = f"images/{i:0{width}d}.ppm"
            write_ppm(directory / name, dataset.image(i))
            items.append({"file": name, "label": int(dataset.labels[i]), "sha256": _sha256(directory / name)})
        manifest = {
            "version": MANIFEST_VERSION,
            "split": dataset.split,
            "classes": list(dataset.classes),
            "items": items,
            "provenance": dataset.provenance,
            "seed": dataset.provenance.get("seed"),
            "content_hash": hashlib.sha256("".join(it["sha256"] for it in items).encode()).hexdigest(),
        }
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, default=str))
    except OSError as exc:
        raise OSError(f"writing dataset to {directory}: {exc}") from exc
    return path


def read_manifest(directory, verify: bool = True) -> LabeledImageSet:
    directory = Path(directory)
    path = directory / "manifest.json" if directory.is_dir() else directory
    root = path.parent
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"reading manifest {path}: {exc}") from exc
    imgs, labels = [], []
    for it in manifest["items"]:
        f = root / it["file"]
        if verify and _sha256(f) != it["sha256"]:
            raise ValueError(f"{f}: checksum mismatch")
        imgs.append(read_ppm(f).data)
        labels.append(it["label"])
    classes = tuple(manifest["classes"])
    images = np.stack(imgs) if imgs else np.zeros((0, 3, 0, 0))
    return LabeledImageSet(images, np.array(labels, dtype=np.int64), classes, manifest.get("split", ""), manifest.get("provenance") or {})


def quantized(dataset: LabeledImageSet) -> LabeledImageSet:
    """The set as it will read back from disk (8-bit)."""
    return LabeledImageSet(quantize(dataset.images) / 255.0, dataset.labels, dataset.classes, dataset.split,
                           dict(dataset.provenance))

"""RGB <-> HSL conversion on planar float64 images, plus binary PPM I/O.

Arrays are planar: the channel axis is ``-3`` so the same functions work on a
single ``(3, H, W)`` image or on a batch ``(..., 3, H, W)``. Hue is in radians
in ``[0, 2*pi)``; saturation and luminance are in ``[0, 1]``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RgbImage:
    """Planar RGB image, ``data`` has shape ``(3, H, W)`` with values in [0, 1].

    ``phase`` optionally carries the circle angle of every channel after an
    RGB-shift action (see :func:`t3cen.groups.rgb_shift_action`).
    """

    data: np.ndarray
    phase: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] != 3:
            raise ValueError(f"expected planar (3, H, W) data, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @classmethod
    def from_hwc(cls, array) -> "RgbImage":
        return cls(np.moveaxis(np.asarray(array, dtype=np.float64), -1, 0))

    def to_hwc(self) -> np.ndarray:
        return np.moveaxis(self.data, 0, -1)


@dataclass(frozen=True)
class HslImage:
    """Planar HSL image, ``data[0]`` hue (radians), ``data[1]`` saturation, ``data[2]`` luminance.

    ``phase`` is an optional ``(2, H, W)`` array with the circle angles of the
    saturation and luminance channels. It is set by the double-cover actions so
    that repeated actions compose exactly; when absent the principal branch of
    the cover is used.
    """

    data: np.ndarray
    phase: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] != 3:
            raise ValueError(f"expected planar (3, H, W) data, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        if self.phase is not None and np.shape(self.phase) != (2,) + data.shape[1:]:
            raise ValueError("phase must have shape (2, H, W)")

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def h(self) -> np.ndarray:
        return self.data[0]

    @property
    def s(self) -> np.ndarray:
        return self.data[1]

    @property
    def l(self) -> np.ndarray:  # noqa: E743
        return self.data[2]


def rgb_to_hsl_array(rgb: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSL on planar arrays. Achromatic pixels get h = s = 0."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0, :, :], rgb[..., 1, :, :], rgb[..., 2, :, :]
    cmax = np.maximum(np.maximum(r, g), b)
    cmin = np.minimum(np.minimum(r, g), b)
    delta = cmax - cmin
    light = 0.5 * (cmax + cmin)
    chromatic = delta > 0

    denom = 1.0 - np.abs(2.0 * light - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sat = np.where(chromatic & (denom > 0), delta / np.where(denom > 0, denom, 1.0), 0.0)
        safe = np.where(chromatic, delta, 1.0)
        hr = np.mod((g - b) / safe, 6.0)
        hg = (b - r) / safe + 2.0
        hb = (r - g) / safe + 4.0
    sextant = np.where(cmax == r, hr, np.where(cmax == g, hg, hb))
    hue = np.where(chromatic, sextant * (np.pi / 3.0), 0.0)
    hue = np.mod(hue, TWO_PI)
    hue = np.where(hue >= TWO_PI, 0.0, hue)
    return np.stack([hue, np.clip(sat, 0.0, 1.0), light], axis=-3)


def hsl_to_rgb_array(hsl: np.ndarray) -> np.ndarray:
    """HSL -> RGB on planar arrays; total on every input."""
    hsl = np.asarray(hsl, dtype=np.float64)
    h, s, l = hsl[..., 0, :, :], hsl[..., 1, :, :], hsl[..., 2, :, :]
    a = s * np.minimum(l, 1.0 - l)
    # hue in twelfths of a turn
    h12 = np.mod(h, TWO_PI) * (6.0 / np.pi)
    out = []
    for n in (0.0, 8.0, 4.0):
        k = np.mod(n + h12, 12.0)
        out.append(l - a * np.clip(np.minimum(k - 3.0, 9.0 - k), -1.0, 1.0))
    return np.clip(np.stack(out, axis=-3), 0.0, 1.0)


def rgb_to_hsl(img: RgbImage) -> HslImage:
    return HslImage(rgb_to_hsl_array(img.data))


def hsl_to_rgb(img: HslImage) -> RgbImage:
    return RgbImage(hsl_to_rgb_array(img.data))


# --- PPM (P6, 8-bit) -------------------------------------------------------


def quantize(data: np.ndarray) -> np.ndarray:
    """Round-to-nearest of 255*v clamped to [0, 255], as uint8."""
    return np.clip(np.rint(np.asarray(data) * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path, img: RgbImage) -> None:
    hwc = quantize(img.to_hwc())
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(hwc.tobytes())


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        if buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif buf[pos : pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ValueError(f"truncated PPM header at byte {start}")
    return buf[start:pos], pos


def read_ppm(path) -> RgbImage:
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic != b"P6":
        raise ValueError(f"{os.fspath(path)}: not a binary PPM (magic {magic!r})")
    width, pos = _read_token(buf, pos)
    height, pos = _read_token(buf, pos)
    maxval, pos = _read_token(buf, pos)
    width, height, maxval = int(width), int(height), int(maxval)
    if maxval != 255:
        raise ValueError(f"{os.fspath(path)}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    size = width * height * 3
    payload = buf[pos : pos + size]
    if len(payload) != size:
        raise ValueError(f"{os.fspath(path)}: truncated pixel data at byte {pos + len(payload)}")
    hwc = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage.from_hwc(hwc.astype(np.float64) / 255.0)

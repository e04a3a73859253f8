"""Discretized hue / saturation / luminance groups and their actions.

Interval-valued channels are given cyclic structure through a double cover
of the interval by the circle. An angle theta is *projected* onto the
interval, and an interval value is *lifted* back to its principal preimage.
Images produced by the saturation / luminance actions remember the angle of
every pixel (``HslImage.phase``) so that repeated actions compose exactly.

Group elements are handled as integer indices; angles are derived from them
only when an action is applied, so group axioms hold in exact arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .colorspace import TWO_PI, HslImage, RgbImage

AXES = ("hue", "sat", "lum")


class DomainError(ValueError):
    """Raised when a value lies outside the domain of an operation."""


@dataclass(frozen=True)
class CyclicGroup:
    """Cyclic group C_N realized as the angles {2*pi*k/N}."""

    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"group order must be a positive integer, got {self.order!r}")

    @property
    def identity(self) -> int:
        return 0

    def elements(self) -> range:
        return range(self.order)

    def compose(self, a: int, b: int) -> int:
        return (a + b) % self.order

    def inverse(self, a: int) -> int:
        return (self.order - a) % self.order

    def angle(self, k) -> float:
        return TWO_PI * (np.asarray(k) % self.order) / self.order

    def __contains__(self, k) -> bool:
        return isinstance(k, (int, np.integer)) and 0 <= k < self.order


@dataclass(frozen=True)
class HslGroup:
    """Product group H_N x S_M x L_R; elements are index triples (i, j, k)."""

    hue: CyclicGroup = field(default_factory=lambda: CyclicGroup(1))
    sat: CyclicGroup = field(default_factory=lambda: CyclicGroup(1))
    lum: CyclicGroup = field(default_factory=lambda: CyclicGroup(1))

    @classmethod
    def of(cls, n: int = 1, m: int = 1, r: int = 1) -> "HslGroup":
        return cls(CyclicGroup(n), CyclicGroup(m), CyclicGroup(r))

    @property
    def orders(self) -> tuple[int, int, int]:
        return (self.hue.order, self.sat.order, self.lum.order)

    @property
    def size(self) -> int:
        n, m, r = self.orders
        return n * m * r

    @property
    def factors(self) -> tuple[CyclicGroup, CyclicGroup, CyclicGroup]:
        return (self.hue, self.sat, self.lum)

    @property
    def identity(self) -> tuple[int, int, int]:
        return (0, 0, 0)

    def elements(self) -> Iterator[tuple[int, int, int]]:
        """All elements in lexicographic (i, j, k) order."""
        return itertools.product(*(range(o) for o in self.orders))

    def compose(self, g, h) -> tuple[int, int, int]:
        return tuple(f.compose(a, b) for f, a, b in zip(self.factors, g, h))

    def inverse(self, g) -> tuple[int, int, int]:
        return tuple(f.inverse(a) for f, a in zip(self.factors, g))

    def angles(self, g) -> tuple[float, float, float]:
        return tuple(float(f.angle(a)) for f, a in zip(self.factors, g))


# --- double cover --------------------------------------------------------------


@dataclass(frozen=True)
class CoverMap:
    """Double cover of the interval [0, c] by the circle.

    saturation: u(theta) = c/2 + (c/2) sin(theta)
    luminance:  u(theta) = c |sin(theta / 2)|
    """

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("saturation", "luminance"):
            raise ValueError(f"unknown cover kind {self.kind!r}")

    def project(self, theta):
        theta = np.mod(theta, TWO_PI)
        if self.kind == "saturation":
            return 0.5 * self.c + 0.5 * self.c * np.sin(theta)
        return self.c * np.abs(np.sin(0.5 * theta))

    def lift(self, v):
        """Principal preimage of v: saturation in [0, 2pi), luminance in [0, pi]."""
        v = np.asarray(v, dtype=np.float64)
        tol = 1e-12 * max(self.c, 1.0)
        if np.any(~np.isfinite(v)) or np.any(v < -tol) or np.any(v > self.c + tol):
            raise DomainError(f"value outside [0, {self.c}]")
        u = np.clip(v / self.c, 0.0, 1.0)
        if self.kind == "saturation":
            theta = np.mod(np.arcsin(2.0 * u - 1.0), TWO_PI)
            return np.where(theta >= TWO_PI, 0.0, theta)
        return 2.0 * np.arcsin(u)


SATURATION = CoverMap("saturation")
LUMINANCE = CoverMap("luminance")


def cover_project(m: CoverMap, theta):
    return m.project(theta)


def cover_lift(m: CoverMap, v):
    return m.lift(v)


def interval_shift_to_angle(shift: float, c: float = 1.0) -> float:
    """Angle that moves a value by ``shift`` along the interval.

    The projection sweeps the whole interval over half a turn, so a shift of
    ``c`` corresponds to an angle of pi.
    """
    return np.pi * shift / c


# --- actions on images ------------------------------------------------------


def _phases(x: HslImage) -> np.ndarray:
    if x.phase is not None:
        return np.asarray(x.phase, dtype=np.float64)
    return np.stack([SATURATION.lift(x.s), LUMINANCE.lift(x.l)])


def hue_action(h: float, x: HslImage) -> HslImage:
    """Rotate every pixel's hue by the angle ``h``."""
    data = x.data.copy()
    hue = np.mod(data[0] + h, TWO_PI)
    data[0] = np.where(hue >= TWO_PI, 0.0, hue)
    return HslImage(data, x.phase)


def _cover_action(index: int, cover: CoverMap, angle: float, x: HslImage) -> HslImage:
    phase = _phases(x).copy()
    phase[index - 1] = np.mod(phase[index - 1] + angle, TWO_PI)
    data = x.data.copy()
    data[index] = cover.project(phase[index - 1])
    return HslImage(data, phase)


def sat_action(s: float, x: HslImage) -> HslImage:
    """Shift saturation by the circle angle ``s`` through the saturation cover."""
    return _cover_action(1, SATURATION, s, x)


def lum_action(l: float, x: HslImage) -> HslImage:  # noqa: E741
    """Shift luminance by the circle angle ``l`` through the luminance cover."""
    return _cover_action(2, LUMINANCE, l, x)


def hsl_action(g: Sequence[float], x: HslImage) -> HslImage:
    """Action of (h, s, l) angles: hue(sat(lum(x)))."""
    h, s, l = g
    return hue_action(h, sat_action(s, lum_action(l, x)))


def act_hsl_arrays(hsl: np.ndarray, phase: Optional[np.ndarray], angles) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hsl_action` on planar ``(..., 3, H, W)`` arrays.

    ``angles`` is a triple of scalars or of arrays broadcastable against the
    leading axes of ``hsl``. Returns the transformed HSL array and the
    ``(..., 2, H, W)`` phase array.
    """
    hsl = np.asarray(hsl, dtype=np.float64)
    if phase is None:
        phase = np.stack([SATURATION.lift(hsl[..., 1, :, :]), LUMINANCE.lift(hsl[..., 2, :, :])], axis=-3)
    h, s, l = (np.asarray(a, dtype=np.float64)[..., None, None] for a in angles)
    hue = np.mod(hsl[..., 0, :, :] + h, TWO_PI)
    hue = np.where(hue >= TWO_PI, 0.0, hue)
    ps = np.mod(phase[..., 0, :, :] + s, TWO_PI)
    pl = np.mod(phase[..., 1, :, :] + l, TWO_PI)
    out = np.stack([hue, SATURATION.project(ps), LUMINANCE.project(pl)], axis=-3)
    return out, np.stack([ps, pl], axis=-3)


# --- actions on group-indexed functions -------------------------------------


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        if axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
        return AXES.index(axis)
    return int(axis)


def function_action(axis, shift: int, f: np.ndarray, offset: int = 0) -> np.ndarray:
    """Cyclic shift of a group-indexed function: ``out[i] = f[(i + shift) mod n]``.

    The three group axes of ``f`` start at ``offset`` (0 for a single function,
    1 for a batch).
    """
    ax = offset + _axis_index(axis)
    n = f.shape[ax]
    if not (0 <= shift < n):
        raise IndexError(f"shift {shift} out of range for axis of order {n}")
    return np.roll(f, -shift, axis=ax)


def group_function_action(g, f: np.ndarray, offset: int = 0) -> np.ndarray:
    """Action of an element (i, j, k) on an HSL-group function."""
    out = f
    for axis, shift in zip(AXES, g):
        out = function_action(axis, shift, out, offset)
    return out


# --- translation-with-clipping baseline ("LCER") ----------------------------


def lcer_step(order: int, c: float = 1.0) -> float:
    """Translation per index so that ``order`` lifted copies span a width c."""
    return c / (order - 1) if order > 1 else 0.0


def _lcer_channel_action(channel: int, index: int, x: HslImage, order: int, c: float) -> HslImage:
    data = x.data.copy()
    data[channel] = np.clip(data[channel] + index * lcer_step(order, c), 0.0, c)
    return HslImage(data)


def lcer_sat_action(s_index: int, x: HslImage, order: int, c: float = 1.0) -> HslImage:
    """Baseline saturation action: ``min(x_s + s_index * step, c)``.

    Negative indices lower the saturation, clipped at 0.
    """
    return _lcer_channel_action(1, s_index, x, order, c)


def lcer_lum_action(l_index: int, x: HslImage, order: int, c: float = 1.0) -> HslImage:
    return _lcer_channel_action(2, l_index, x, order, c)


def lcer_function_action(index: int, f: np.ndarray, axis=1, offset: int = 0) -> np.ndarray:
    """Non-cyclic shift with zero fill: ``(f[i], ..., f[n-1], 0, ..., 0)``.

    A negative index shifts the other way, zero-filling the front.
    """
    ax = offset + _axis_index(axis)
    n = f.shape[ax]
    out = np.zeros_like(f)
    if abs(index) >= n:
        return out
    src = [slice(None)] * f.ndim
    dst = [slice(None)] * f.ndim
    if index >= 0:
        src[ax], dst[ax] = slice(index, n), slice(0, n - index)
    else:
        src[ax], dst[ax] = slice(0, n + index), slice(-index, n)
    out[tuple(dst)] = f[tuple(src)]
    return out


# --- RGB shift ---------------------------------------------------------------


def rgb_shift_action(g: Sequence[float], x: RgbImage) -> RgbImage:
    """Shift each RGB channel by its own angle through the saturation-style cover."""
    phase = x.phase if x.phase is not None else SATURATION.lift(x.data)
    angles = np.asarray(g, dtype=np.float64)[:, None, None]
    phase = np.mod(phase + angles, TWO_PI)
    return RgbImage(SATURATION.project(phase), phase)


# --- scale -------------------------------------------------------------------


def grid_coordinates(height: int, width: int) -> np.ndarray:
    """Normalized pixel coordinates, shape ``(2, H, W)``: (p_x, p_y) in [0, 1]."""
    py, px = np.meshgrid(
        np.linspace(0.0, 1.0, height) if height > 1 else np.zeros(1),
        np.linspace(0.0, 1.0, width) if width > 1 else np.zeros(1),
        indexing="ij",
    )
    return np.stack([px, py])


def scale_coordinate_angles(alpha: float, angles: np.ndarray) -> np.ndarray:
    """Scale action on lifted coordinates: a rotation of the circle."""
    return np.mod(np.asarray(angles) + alpha, TWO_PI)


def scale_coordinate_map(alpha: float, coords: np.ndarray) -> np.ndarray:
    """Continuous coordinate warp p -> pi(lift(p) + alpha) with the luminance-style cover.

    This re-lifts through the principal branch, so it is a single warp only;
    compose warps through :func:`scale_action`, which carries the angles.
    """
    return LUMINANCE.project(scale_coordinate_angles(alpha, LUMINANCE.lift(coords)))


@dataclass(frozen=True)
class ScaledImage:
    """An image viewed through a warp of its coordinates on the circle.

    ``angles[:, y, x]`` holds the circle angles of the source coordinates that
    output pixel (y, x) samples.
    """

    source: RgbImage
    angles: np.ndarray

    @classmethod
    def identity(cls, x: RgbImage) -> "ScaledImage":
        return cls(x, LUMINANCE.lift(grid_coordinates(x.height, x.width)))

    def coordinates(self) -> np.ndarray:
        return LUMINANCE.project(self.angles)

    def render(self) -> RgbImage:
        return RgbImage(bilinear_sample(self.source.data, self.coordinates()))


def scale_action(alpha: float, x) -> ScaledImage:
    """Scale action on an image (or an already warped image)."""
    if isinstance(x, RgbImage):
        x = ScaledImage.identity(x)
    return ScaledImage(x.source, scale_coordinate_angles(alpha, x.angles))


def bilinear_sample(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Sample planar ``(C, H, W)`` data at normalized coordinates with edge clamping."""
    _, height, width = data.shape
    fx = np.clip(coords[0], 0.0, 1.0) * (width - 1)
    fy = np.clip(coords[1], 0.0, 1.0) * (height - 1)
    x0 = np.clip(np.floor(fx).astype(int), 0, max(width - 2, 0))
    y0 = np.clip(np.floor(fy).astype(int), 0, max(height - 2, 0))
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    wx = fx - x0
    wy = fy - y0
    top = data[:, y0, x0] * (1 - wx) + data[:, y0, x1] * wx
    bottom = data[:, y1, x0] * (1 - wx) + data[:, y1, x1] * wx
    return top * (1 - wy) + bottom * wy

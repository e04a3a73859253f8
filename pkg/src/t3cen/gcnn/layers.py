"""Layer vocabulary of the network: each layer caches what its backward pass needs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..colorspace import TWO_PI, hsl_to_rgb_array
from ..groups import HslGroup
from ..lifting import lift_arrays, lift_arrays_lcer, lift_arrays_rgb
from . import ops

ENCODINGS = ("rgb", "hsl")
LIFT_MODELS = ("double_cover", "lcer", "rgb_shift")


class Layer:
    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError


def encode(hsl: np.ndarray, encoding: str) -> np.ndarray:
    """Render lifted HSL copies as network input planes."""
    if encoding == "rgb":
        return hsl_to_rgb_array(hsl)
    if encoding == "hsl":
        planes = hsl.copy()
        planes[..., 0, :, :] /= TWO_PI
        return planes
    raise ValueError(f"encoding must be one of {ENCODINGS}, got {encoding!r}")


class Lift(Layer):
    """Map a batch of HSL images (B, 3, H, W) to transformed copies (B, N, M, R, 3, H, W).

    ``model='double_cover'`` lifts saturation and luminance through the circle;
    ``model='lcer'`` uses clipped translations for both. ``model='rgb_shift'``
    takes planar RGB instead and lifts each channel through the circle; its
    copies are fed to the network as they are.
    """

    def __init__(self, group: HslGroup, model: str = "double_cover", encoding: str = "rgb", dtype=np.float32):
        super().__init__()
        if model not in LIFT_MODELS:
            raise ValueError(f"unknown model {model!r}")
        self.group, self.model, self.encoding, self.dtype = group, model, encoding, dtype

    def forward(self, x):
        hsl, phase = x if isinstance(x, tuple) else (x, None)
        if self.model == "rgb_shift":
            lifted, _ = lift_arrays_rgb(hsl, self.group, phase)
            return lifted.astype(self.dtype, copy=False)
        if self.model == "double_cover":
            lifted, _ = lift_arrays(hsl, self.group, phase)
        else:
            lifted = lift_arrays_lcer(hsl, self.group)
        return encode(lifted, self.encoding).astype(self.dtype, copy=False)

    def backward(self, dout):
        return None


def _uniform(rng, bound, shape, dtype):
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class LiftingConv(Layer):
    """One planar filter bank applied to every lifted copy."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng, dtype=np.float32):
        super().__init__()
        fan_in = in_channels * kernel * kernel
        self.params["weight"] = _uniform(rng, np.sqrt(6.0 / fan_in), (out_channels, in_channels, kernel, kernel), dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)

    def forward(self, x):
        bsz, n, m, r, c, h, w = x.shape
        flat = x.reshape(bsz * n * m * r, c, h, w)
        self._cache = flat, x.shape
        out = ops.conv2d(flat, self.params["weight"], self.params["bias"])
        return out.reshape(bsz, n, m, r, -1, h, w)

    def backward(self, dout):
        flat, shape = self._cache
        bsz, n, m, r, _, h, w = dout.shape
        d = dout.reshape(bsz * n * m * r, -1, h, w)
        dx, dw, db = ops.conv2d_backward(d, flat, self.params["weight"], need_dx=True)
        self.grads["weight"], self.grads["bias"] = dw, db
        return dx.reshape(shape)


class GroupConv(Layer):
    """HSL group convolution; ``kinds`` selects cyclic or zero-padded translation axes."""

    def __init__(self, in_channels: int, out_channels: int, orders: Sequence[int], kernel: int, rng,
                 kinds: Sequence[str] = ("cyclic",) * 3, dtype=np.float32):
        super().__init__()
        n, m, r = orders
        self.kinds = tuple(kinds)
        self.index = ops.group_index_table(orders, self.kinds)
        fan_in = in_channels * n * m * r * kernel * kernel
        shape = (out_channels, in_channels, n, m, r, kernel, kernel)
        self.params["weight"] = _uniform(rng, np.sqrt(6.0 / fan_in), shape, dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)

    def forward(self, x):
        bsz, n, m, r, k, h, w = x.shape
        g = n * m * r
        wexp = ops.expand_group_filter(self.params["weight"], self.index)
        flat = x.reshape(bsz, g * k, h, w)
        self._cache = flat, x.shape, wexp
        out = ops.conv2d(flat, wexp, np.tile(self.params["bias"], g))
        return out.reshape(bsz, n, m, r, -1, h, w)

    def backward(self, dout):
        flat, shape, wexp = self._cache
        bsz, n, m, r, o, h, w = dout.shape
        d = dout.reshape(bsz, n * m * r * o, h, w)
        dx, dwexp, db = ops.conv2d_backward(d, flat, wexp, need_dx=True)
        self.grads["weight"] = ops.fold_group_filter_grad(dwexp, self.index, self.params["weight"].shape)
        self.grads["bias"] = db.reshape(n * m * r, o).sum(axis=0)
        return dx.reshape(shape)


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0)


class SpatialMaxPool(Layer):
    """2x2 max-pool over the two trailing spatial axes; odd trailing rows/cols are dropped."""

    def forward(self, x):
        h, w = x.shape[-2:]
        h2, w2 = h // 2, w // 2
        xc = x[..., : 2 * h2, : 2 * w2]
        blocks = xc.reshape(x.shape[:-2] + (h2, 2, w2, 2))
        blocks = np.moveaxis(blocks, -3, -2).reshape(x.shape[:-2] + (h2, w2, 4))
        arg = blocks.argmax(axis=-1)
        self._cache = x.shape, arg
        return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        shape, arg = self._cache
        h, w = shape[-2:]
        h2, w2 = h // 2, w // 2
        onehot = np.zeros(dout.shape + (4,), dtype=dout.dtype)
        np.put_along_axis(onehot, arg[..., None], dout[..., None], axis=-1)
        blocks = onehot.reshape(dout.shape[:-2] + (h2, w2, 2, 2))
        blocks = np.moveaxis(blocks, -2, -3).reshape(dout.shape[:-2] + (2 * h2, 2 * w2))
        dx = np.zeros(shape, dtype=dout.dtype)
        dx[..., : 2 * h2, : 2 * w2] = blocks
        return dx


class GroupPool(Layer):
    """Reduce (B, N, M, R, K, H, W) over the group axes; max ties go to the first (i, j, k)."""

    def __init__(self, mode: str = "max"):
        super().__init__()
        if mode not in ("max", "mean"):
            raise ValueError(f"unknown pooling mode {mode!r}")
        self.mode = mode

    def forward(self, x):
        bsz, n, m, r = x.shape[:4]
        flat = x.reshape((bsz, n * m * r) + x.shape[4:])
        self._shape = x.shape
        if self.mode == "mean":
            return flat.mean(axis=1)
        self._arg = flat.argmax(axis=1)
        return np.take_along_axis(flat, self._arg[:, None], axis=1)[:, 0]

    def backward(self, dout):
        bsz, n, m, r = self._shape[:4]
        g = n * m * r
        if self.mode == "mean":
            dflat = np.broadcast_to(dout[:, None] / g, (bsz, g) + dout.shape[1:]).copy()
        else:
            dflat = np.zeros((bsz, g) + dout.shape[1:], dtype=dout.dtype)
            np.put_along_axis(dflat, self._arg[:, None], dout[:, None], axis=1)
        return dflat.reshape(self._shape)


class GlobalMeanPool(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=(-2, -1))

    def backward(self, dout):
        h, w = self._shape[-2:]
        return np.broadcast_to(dout[..., None, None] / (h * w), self._shape).copy()


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, rng, dtype=np.float32):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.params["weight"] = _uniform(rng, bound, (out_features, in_features), dtype)
        self.params["bias"] = np.zeros(out_features, dtype=dtype)

    def forward(self, x):
        self._x = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dout):
        self.grads["weight"] = dout.T @ self._x
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.params["weight"]

"""Dense tensor kernels with explicit backward passes.

Feature maps are laid out ``(B, N, M, R, K, H, W)``; for convolution the
group axes and channels are flattened to ``(B, N*M*R*K, H, W)`` with the group
index major, matching the row/column order of :func:`expand_group_filter`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

KINDS = ("cyclic", "translation")


class ShapeError(ValueError):
    pass


# --- planar convolution ------------------------------------------------------


def _check_conv(x: np.ndarray, w: np.ndarray) -> tuple[int, int]:
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"expected x (B, C, H, W) and w (O, C, kh, kw), got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"channel mismatch: input has {x.shape[1]}, filter expects {w.shape[1]}")
    kh, kw = w.shape[2:]
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError("spatial kernels must be odd-sized")
    return kh // 2, kw // 2


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(B, C, H, W) -> channels-last patches (B*H*W, kh*kw*C), zero-padded to same size."""
    bsz, c, h, wd = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((bsz, h + 2 * ph, wd + 2 * pw, c), dtype=x.dtype)
    xp[:, ph : ph + h, pw : pw + wd, :] = x.transpose(0, 2, 3, 1)
    cols = np.empty((bsz, h, wd, kh, kw, c), dtype=x.dtype)
    for ty in range(kh):
        for tx in range(kw):
            cols[:, :, :, ty, tx, :] = xp[:, ty : ty + h, tx : tx + wd, :]
    return cols.reshape(bsz * h * wd, kh * kw * c)


def _weight_matrix(w: np.ndarray) -> np.ndarray:
    o, c, kh, kw = w.shape
    return w.transpose(2, 3, 1, 0).reshape(kh * kw * c, o)


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Same-padded 2D cross-correlation, ``x`` (B, C, H, W), ``w`` (O, C, kh, kw)."""
    _check_conv(x, w)
    bsz, _, h, wd = x.shape
    o, _, kh, kw = w.shape
    dtype = np.result_type(x, w)
    out = _im2col(x.astype(dtype, copy=False), kh, kw) @ _weight_matrix(w).astype(dtype, copy=False)
    if b is not None:
        out += b
    return out.reshape(bsz, h, wd, o).transpose(0, 3, 1, 2)


def conv2d_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray, need_dx: bool = True):
    """Gradients of :func:`conv2d` w.r.t. input, weights and bias."""
    ph, pw = _check_conv(x, w)
    bsz, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    dt = dout.transpose(0, 2, 3, 1).reshape(-1, o)
    cols = _im2col(x, kh, kw)
    dw = (cols.T @ dt).reshape(kh, kw, c, o).transpose(3, 2, 0, 1).astype(w.dtype, copy=False)
    db = dt.sum(axis=0)
    dx = None
    if need_dx:
        del cols
        dcols = (dt @ _weight_matrix(w).T).reshape(bsz, h, wd, kh, kw, c)
        dxp = np.zeros((bsz, h + 2 * ph, wd + 2 * pw, c), dtype=dcols.dtype)
        for ty in range(kh):
            for tx in range(kw):
                dxp[:, ty : ty + h, tx : tx + wd, :] += dcols[:, :, :, ty, tx, :]
        dx = dxp[:, ph : ph + h, pw : pw + wd, :].transpose(0, 3, 1, 2)
    return dx, np.ascontiguousarray(dw), db


def planar_conv2d(f: np.ndarray, psi: np.ndarray, padding: str = "same") -> np.ndarray:
    """2D cross-correlation with zero-fill same padding.

    Accepts a single map ``(C, H, W)`` or a batch ``(B, C, H, W)``.
    """
    if padding != "same":
        raise ValueError("only 'same' padding is supported")
    single = f.ndim == 3
    out = conv2d(f[None] if single else f, psi)
    return out[0] if single else out


# --- group filter expansion --------------------------------------------------


def axis_difference(order: int, kind: str) -> np.ndarray:
    """d[a, r] = index of r^{-1} a along one axis, or -1 where the filter is zero-padded."""
    a = np.arange(order)[:, None]
    r = np.arange(order)[None, :]
    if kind == "cyclic":
        return (a - r) % order
    if kind == "translation":
        d = a - r
        return np.where(d >= 0, d, -1)
    raise ValueError(f"axis kind must be one of {KINDS}, got {kind!r}")


def group_index_table(orders: Sequence[int], kinds: Sequence[str]) -> np.ndarray:
    """Flat filter index for every (output element a, input element r) pair.

    Entries equal to ``prod(orders)`` point at an appended zero slot.
    """
    n, m, r = orders
    g = n * m * r
    dh, ds, dl = (axis_difference(o, k) for o, k in zip(orders, kinds))
    # broadcast to (a_i, a_j, a_k, r_i, r_j, r_k)
    dh = dh[:, None, None, :, None, None]
    ds = ds[None, :, None, None, :, None]
    dl = dl[None, None, :, None, None, :]
    flat = dh * (m * r) + ds * r + dl
    invalid = (dh < 0) | (ds < 0) | (dl < 0)
    return np.where(invalid, g, flat).reshape(g, g)


def expand_group_filter(psi: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Expand ``psi`` (O, C, N, M, R, kh, kw) into a planar weight (G*O, G*C, kh, kw)."""
    o, c = psi.shape[:2]
    kh, kw = psi.shape[-2:]
    g = index.shape[0]
    flat = psi.reshape(o, c, g, kh, kw)
    ext = np.concatenate([flat, np.zeros((o, c, 1, kh, kw), dtype=psi.dtype)], axis=2)
    w6 = ext[:, :, index]  # (O, C, G_a, G_r, kh, kw)
    return w6.transpose(2, 0, 3, 1, 4, 5).reshape(g * o, g * c, kh, kw)


def fold_group_filter_grad(dw: np.ndarray, index: np.ndarray, psi_shape) -> np.ndarray:
    """Adjoint of :func:`expand_group_filter`."""
    o, c = psi_shape[:2]
    kh, kw = psi_shape[-2:]
    g = index.shape[0]
    d6 = dw.reshape(g, o, g, c, kh, kw).transpose(1, 3, 0, 2, 4, 5)
    ext = np.zeros((o, c, g + 1, kh, kw), dtype=dw.dtype)
    np.add.at(ext, (slice(None), slice(None), index), d6)
    return ext[:, :, :g].reshape(psi_shape)


def group_conv(f: np.ndarray, psi: np.ndarray, bias: np.ndarray | None = None,
               kinds: Sequence[str] = ("cyclic",) * 3) -> np.ndarray:
    """HSL group convolution of a batch of feature maps.

    ``f`` has shape (B, N, M, R, K_in, H, W) and ``psi`` (K_out, K_in, N, M, R, kh, kw).
    out(a) = sum_r sum_k f_k(r) * psi_k(r^{-1} a), with planar cross-correlation
    in space. Along ``translation`` axes the filter is zero outside [0, n).
    """
    bsz, n, m, r, k, h, w = f.shape
    if psi.shape[1:5] != (k, n, m, r):
        raise ShapeError(f"filter group axes {psi.shape[2:5]} / channels {psi.shape[1]} "
                         f"do not match feature map {(n, m, r)} / {k}")
    index = group_index_table((n, m, r), kinds)
    wexp = expand_group_filter(psi, index)
    b = None if bias is None else np.tile(bias, n * m * r)
    out = conv2d(f.reshape(bsz, n * m * r * k, h, w), wexp, b)
    return out.reshape(bsz, n, m, r, psi.shape[0], h, w)


def group_pool(f: np.ndarray, mode: str = "max") -> np.ndarray:
    """Reduce a (..., N, M, R, K, H, W) map over its three group axes."""
    axes = (-6, -5, -4)
    if mode == "max":
        return f.max(axis=axes)
    if mode == "mean":
        return f.mean(axis=axes)
    raise ValueError(f"unknown pooling mode {mode!r}")

"""Equivariance and lifting-error measurements for the double-cover model and the clipping baseline."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .colorspace import TWO_PI, hsl_to_rgb_array, rgb_to_hsl_array
from .groups import AXES, SATURATION, act_hsl_arrays, function_action, interval_shift_to_angle, lcer_function_action, lcer_step
from .gcnn.network import Network, NetworkConfig, build_network

MODELS = ("double_cover", "lcer", "rgb_shift")
RGB_AXES = ("red", "green", "blue")
SWEEP_ORDERS = (3, 5, 7, 9, 11, 15)

# feature maps are (B, N, M, R, K, H, W); group axes start at 1
GROUP_OFFSET = 1


@dataclass(frozen=True)
class EquivarianceResult:
    model: str
    axis: str
    order: int
    element: int
    error: float
    degenerate: bool = False
    seed: int = 0


def relative_l1_error(a: np.ndarray, b: np.ndarray) -> tuple[float, bool]:
    """``|a - b|_1 / |a + b|_1`` over all entries; ``(0, True)`` when the denominator vanishes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    den = np.abs(a + b).sum()
    if den == 0.0:
        return 0.0, True
    return float(np.abs(a - b).sum() / den), False


def _check(model: str, axis: str) -> int:
    """Validate and return the group-axis index (0, 1, 2)."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    names = RGB_AXES if model == "rgb_shift" else AXES
    if axis not in names:
        raise ValueError(f"axis must be one of {names} for model {model!r}, got {axis!r}")
    return names.index(axis)


def transform_input(model: str, axis: str, element: int, order: int, hsl: np.ndarray,
                    phase: Optional[np.ndarray] = None):
    """Act on an HSL batch with a group element; returns ``(hsl, phase)``.

    Hue is cyclic for both HSL models. For the baseline, saturation and
    luminance move by ``element`` translation steps with clipping and the phase
    is None. For ``rgb_shift`` the input is planar RGB.
    """
    ch = _check(model, axis)
    if element == 0:
        return np.array(hsl, dtype=np.float64, copy=True), phase
    if model == "rgb_shift":
        phase = SATURATION.lift(np.asarray(hsl, dtype=np.float64)) if phase is None else phase
        shift = np.zeros((3, 1, 1))
        shift[ch] = TWO_PI * (element % order) / order
        moved = np.mod(phase + shift, TWO_PI)
        return SATURATION.project(moved), moved
    if model == "double_cover" or axis == "hue":
        angles = [0.0, 0.0, 0.0]
        angles[ch] = TWO_PI * (element % order) / order
        return act_hsl_arrays(hsl, phase, angles)
    out = np.array(hsl, dtype=np.float64, copy=True)
    out[..., ch, :, :] = np.clip(out[..., ch, :, :] + element * lcer_step(order), 0.0, 1.0)
    return out, None


def transform_features(model: str, axis: str, element: int, feats: np.ndarray) -> np.ndarray:
    """Expected feature response: cyclic roll, or zero-filled shift along baseline sat/lum axes."""
    ax = _check(model, axis)
    order = feats.shape[GROUP_OFFSET + ax]
    if model in ("double_cover", "rgb_shift") or axis == "hue":
        return function_action(ax, element % order, feats, GROUP_OFFSET)
    return lcer_function_action(element, feats, axis, GROUP_OFFSET)


def equivariance_error(f: Callable, axis: str, element: int, x: np.ndarray, model: str = "double_cover",
                       phase: Optional[np.ndarray] = None) -> EquivarianceResult:
    """Normalized error between f(g x) and g f(x).

    ``f`` maps an HSL batch ``(B, 3, H, W)`` (and optional phase) to group
    features ``(B, N, M, R, ...)``.
    """
    base = f(x, phase)
    order = base.shape[GROUP_OFFSET + _check(model, axis)]
    moved_x, moved_phase = transform_input(model, axis, element, order, x, phase)
    err, degenerate = relative_l1_error(f(moved_x, moved_phase), transform_features(model, axis, element, base))
    return EquivarianceResult(model, axis, order, int(element), err, degenerate)


def network_features(net: Network, layer: int = -1) -> Callable:
    """The map from an HSL batch to the output of block ``layer`` of ``net``."""

    def f(hsl, phase=None):
        _, feats = net.forward(hsl, phase, keep_features=True)
        return feats[layer]

    return f


def sweep_network(model: str, axis: str, order: int, seed: int = 0, depth: int = 3, width: int = 27,
                  dtype: str = "float64") -> Network:
    """Randomly initialised network whose group is cyclic of ``order`` along ``axis`` only."""
    orders = [1, 1, 1]
    orders[AXES.index(axis)] = order
    cfg = NetworkConfig(orders=tuple(orders), width=width, depth=depth, model=model, seed=seed, dtype=dtype)
    return build_network(cfg, check=False)


def synthetic_test_images(count: int = 20, size: int = 32, seed: int = 0) -> np.ndarray:
    """Planar HSL test images: alternating saturation/luminance ramps and rendered shapes."""
    from .datasets import generate_shapes

    rng = np.random.default_rng(seed)
    n_ramps = count // 2
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    ramps = []
    for _ in range(n_ramps):
        hue = np.mod(rng.uniform(0, TWO_PI) + rng.uniform(-1, 1) * xx, TWO_PI)
        a, b = rng.uniform(0.0, 1.0, 2)
        sat = np.clip(a * xx + (1 - a) * yy, 0.0, 1.0)
        lum = np.clip(0.15 + 0.7 * (b * yy + (1 - b) * (1 - xx)), 0.0, 1.0)
        ramps.append(np.stack([hue, sat, lum]))
    shapes = generate_shapes(count - n_ramps, seed=seed, size=size, pools=("all",) * 3).hsl()
    out = np.concatenate([np.stack(ramps) if ramps else np.zeros((0, 3, size, size)), shapes])
    return out


def equivariance_sweep(model: str, axis: str = "sat", orders: Sequence[int] = SWEEP_ORDERS,
                       images: Optional[np.ndarray] = None, seeds: Sequence[int] = (0,), elements: str = "step",
                       depth: int = 3) -> list[EquivarianceResult]:
    """Equivariance error of randomly initialised networks' last group feature map, one network per (order, seed).

    ``elements='step'`` moves the input one group step down (for the baseline
    a 1/(M-1) translation, for the double cover a one-element rotation).
    ``elements='all'`` uses every non-identity element of a cyclic axis.
    """
    if images is None:
        images = synthetic_test_images()
    cyclic = model == "double_cover" or axis == "hue"
    results = []
    for order in orders:
        for seed in seeds:
            f = network_features(sweep_network(model, axis, order, seed, depth))
            picks = range(1, order) if elements == "all" and cyclic else [-1]
            for e in picks:
                r = equivariance_error(f, axis, e, images, model)
                results.append(EquivarianceResult(r.model, r.axis, r.order, r.element, r.error, r.degenerate, seed))
    return results


def saturation_sweep(model: str, orders: Sequence[int] = SWEEP_ORDERS, images: Optional[np.ndarray] = None,
                     seeds: Sequence[int] = (0,), elements: str = "step", depth: int = 3) -> list[EquivarianceResult]:
    return equivariance_sweep(model, "sat", orders, images, seeds, elements, depth)


def summarize(results: Sequence[EquivarianceResult]) -> dict:
    """Mean (and spread over seeds and elements) per (model, order), plus the mean over orders."""
    out: dict = {}
    for r in results:
        out.setdefault(r.model, {}).setdefault(r.order, []).append(r.error)
    summary = {}
    for model, per in out.items():
        means = {int(o): float(np.mean(v)) for o, v in sorted(per.items())}
        stds = {int(o): float(np.std(v)) for o, v in sorted(per.items())}
        summary[model] = {"per_order": means, "std": stds, "mean": float(np.mean(list(means.values())))}
    return summary


def write_results_csv(path, results: Sequence[EquivarianceResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["model", "axis", "order", "element", "seed", "error", "degenerate"])
        w.writeheader()
        for r in results:
            w.writerow(asdict(r))


def write_summary_json(path, results: Sequence[EquivarianceResult]) -> None:
    with open(path, "w") as fh:
        json.dump(summarize(results), fh, indent=2)


# --- restoration ----------------------------------------------------------------------


def lifting_restoration_error(model: str, axis: str, shift: float, rgb: np.ndarray) -> float:
    """Mean |x - up(down(x))| on the 0-255 scale for an interval shift on one axis.

    ``rgb`` is planar ``(..., 3, H, W)`` in [0, 1]. Hue shifts are in radians.
    """
    if model == "rgb_shift":
        raise ValueError("restoration error is defined for the HSL models")
    ch = _check(model, axis)
    if shift == 0:
        return 0.0  # the identity element acts trivially
    hsl = rgb_to_hsl_array(rgb)
    if model == "double_cover" or axis == "hue":
        angle = shift if axis == "hue" else interval_shift_to_angle(shift)
        angles = [0.0, 0.0, 0.0]
        angles[ch] = -angle
        down, phase = act_hsl_arrays(hsl, None, angles)
        angles[ch] = angle
        restored, _ = act_hsl_arrays(down, phase, angles)
    else:
        restored = hsl.copy()
        restored[..., ch, :, :] = np.clip(np.clip(hsl[..., ch, :, :] - shift, 0.0, 1.0) + shift, 0.0, 1.0)
    return float(255.0 * np.abs(hsl_to_rgb_array(restored) - np.asarray(rgb, dtype=np.float64)).mean())


# --- commutativity panel --------------------------------------------------------------


@dataclass
class CommutativityPanel:
    """``grid[t, layer]``: max |features(g x) - g features(x)| for transform t."""

    transforms: list
    grid: np.ndarray
    logits_error: np.ndarray

    def to_json(self) -> dict:
        return {"transforms": [list(t) for t in self.transforms], "grid": self.grid.tolist(),
                "logits_error": self.logits_error.tolist()}


def commutativity_panel(net: Network, x: np.ndarray, transforms: Sequence[tuple], phase=None) -> CommutativityPanel:
    """Per-layer commutativity check for ``(axis, element)`` transforms on HSL batch ``x``."""
    model = net.cfg.model
    logits, feats = net.forward(x, phase, keep_features=True)
    grid = np.zeros((len(transforms), len(feats)))
    lerr = np.zeros(len(transforms))
    for t, (axis, element) in enumerate(transforms):
        order = net.cfg.orders[_check(model, axis)]
        mx, mp = transform_input(model, axis, element, order, x, phase)
        mlogits, mfeats = net.forward(mx, mp, keep_features=True)
        for k, (a, b) in enumerate(zip(mfeats, feats)):
            grid[t, k] = np.abs(a - transform_features(model, axis, element, b)).max()
        lerr[t] = np.abs(mlogits - logits).max()
    return CommutativityPanel(list(transforms), grid, lerr)

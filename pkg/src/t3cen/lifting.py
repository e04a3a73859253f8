"""Lifting images onto the HSL group and analyzing how well lifts cover the interval."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .colorspace import TWO_PI, HslImage, hsl_to_rgb_array
from .groups import SATURATION, CoverMap, DomainError, HslGroup, act_hsl_arrays, lcer_step

DEGENERACY_TOL = 1e-9


def group_angle_grids(group: HslGroup) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-axis angle arrays broadcast to shape (N, M, R)."""
    n, m, r = group.orders
    h = (TWO_PI * np.arange(n) / n)[:, None, None]
    s = (TWO_PI * np.arange(m) / m)[None, :, None]
    l = (TWO_PI * np.arange(r) / r)[None, None, :]
    shape = (n, m, r)
    return np.broadcast_to(h, shape), np.broadcast_to(s, shape), np.broadcast_to(l, shape)


def lift_arrays(hsl: np.ndarray, group: HslGroup, phase: Optional[np.ndarray] = None):
    """Lift planar HSL arrays ``(..., 3, H, W)`` to ``(..., N, M, R, 3, H, W)``.

    Entry (i, j, k) is the image acted on by the group element g_ijk.
    Returns the lifted HSL values and their phases ``(..., N, M, R, 2, H, W)``.
    """
    hsl = np.asarray(hsl, dtype=np.float64)
    lead = hsl.ndim - 3
    expand = (Ellipsis,) + (None,) * 3 + (slice(None),) * 3
    src = hsl[expand]
    ph = None if phase is None else np.asarray(phase)[expand]
    h, s, l = group_angle_grids(group)
    angles = tuple(a.reshape((1,) * lead + a.shape) for a in (h, s, l))
    return act_hsl_arrays(src, ph, angles)


def lift_arrays_lcer(hsl: np.ndarray, group: HslGroup, c: float = 1.0) -> np.ndarray:
    """Baseline lifting: cyclic hue, clipped translations for saturation and luminance.

    Copy (i, j, k) has hue + 2*pi*i/N, saturation min(s + j*step_M, c) and
    luminance min(l + k*step_R, c).
    """
    hsl = np.asarray(hsl, dtype=np.float64)
    n, m, r = group.orders
    dh = (TWO_PI * np.arange(n) / n).reshape(n, 1, 1, 1, 1)
    ds = (np.arange(m) * lcer_step(m, c)).reshape(m, 1, 1, 1)
    dl = (np.arange(r) * lcer_step(r, c)).reshape(r, 1, 1)
    # (..., 1, 1, 1, H, W) per channel
    h, s, l = (hsl[..., None, None, None, ch, :, :] for ch in range(3))
    hue = np.mod(h + dh, TWO_PI)
    hue = np.where(hue >= TWO_PI, 0.0, hue)
    sat = np.minimum(s + ds, c)
    lum = np.minimum(l + dl, c)
    return np.stack(np.broadcast_arrays(hue, sat, lum), axis=-3)


def lift_arrays_rgb(rgb: np.ndarray, group: HslGroup, phase: Optional[np.ndarray] = None):
    """Lift planar RGB ``(..., 3, H, W)`` over per-channel shifts: axes act on R, G and B.

    Each channel goes through the saturation-style cover on [0, 1]. Returns
    ``(..., N, M, R, 3, H, W)`` values and phases.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if phase is None:
        phase = SATURATION.lift(rgb)
    lead = rgb.ndim - 3
    expand = (Ellipsis,) + (None,) * 3 + (slice(None),) * 3
    grids = group_angle_grids(group)
    # (N, M, R, 3, 1, 1) angle per output channel
    angles = np.stack(grids, axis=-1)[..., None, None]
    angles = angles.reshape((1,) * lead + angles.shape)
    ph = np.mod(np.asarray(phase)[expand] + angles, TWO_PI)
    return SATURATION.project(ph), ph


@dataclass(frozen=True)
class LiftedStack:
    """The N*M*R transformed copies of an image."""

    group: HslGroup
    hsl: np.ndarray  # (N, M, R, 3, H, W)
    phase: np.ndarray  # (N, M, R, 2, H, W)

    def __len__(self) -> int:
        return self.group.size

    def image(self, i: int, j: int, k: int) -> HslImage:
        return HslImage(self.hsl[i, j, k], self.phase[i, j, k])

    def to_rgb(self) -> np.ndarray:
        return hsl_to_rgb_array(self.hsl)


def lift_image(x: HslImage, group: HslGroup) -> LiftedStack:
    hsl, phase = lift_arrays(x.data, group, x.phase)
    # the identity copy is the input itself, not a round trip through the cover
    hsl[0, 0, 0] = x.data
    return LiftedStack(group, hsl, phase)


# --- coverage analysis ----------------------------------------------------------


def orbit_values(m: CoverMap, v: float, order: int) -> np.ndarray:
    """Projected orbit of v under C_order: element 0 is v itself."""
    if order < 1:
        raise DomainError("order must be >= 1")
    theta = m.lift(v)
    vals = m.project(theta + TWO_PI * np.arange(order) / order)
    vals[0] = float(np.clip(v, 0.0, m.c))
    return vals


def partition_segments(values: Sequence[float], c: float = 1.0) -> np.ndarray:
    """Segment lengths of the partition of [0, c] induced by distinct values."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise DomainError("empty value list")
    if np.any(vals < -1e-12) or np.any(vals > c + 1e-12):
        raise DomainError(f"values outside [0, {c}]")
    pts = np.sort(np.clip(vals, 0.0, c))
    keep = np.concatenate([[True], np.diff(pts) > DEGENERACY_TOL])
    pts = pts[keep]
    return np.diff(np.concatenate([[0.0], pts, [c]]))


def partition_entropy(values: Sequence[float], c: float = 1.0) -> tuple[float, np.ndarray]:
    """Shannon entropy of the normalized partition of [0, c] by ``values``.

    H = -sum (v_i / c) log(v_i / c) over all segments including the two end
    segments; zero-length segments contribute nothing.
    """
    seg = partition_segments(values, c)
    p = seg[seg > 0] / c
    # + 0.0 turns -0.0 into 0.0 for single-segment partitions
    return float(-(p * np.log(p)).sum()) + 0.0, seg


@dataclass(frozen=True)
class CoverageReport:
    input_value: float
    order: int
    lifted_values: tuple
    partition_segments: tuple
    entropy: float
    entropy_density: float
    degenerate: bool
    distinct_count: int

    def row(self) -> dict:
        return {
            "value": self.input_value,
            "order": self.order,
            "entropy": self.entropy,
            "entropy_density": self.entropy_density,
            "degenerate": int(self.degenerate),
            "distinct_count": self.distinct_count,
        }


def distinct_count(values: Sequence[float], tol: float = DEGENERACY_TOL) -> int:
    pts = np.sort(np.asarray(values, dtype=np.float64))
    return int(1 + np.count_nonzero(np.diff(pts) > tol)) if pts.size else 0


def coverage_report(m: CoverMap, v: float, order: int) -> CoverageReport:
    vals = orbit_values(m, v, order)
    entropy, seg = partition_entropy(vals, m.c)
    count = distinct_count(vals)
    return CoverageReport(
        input_value=float(v),
        order=int(order),
        lifted_values=tuple(np.sort(vals).tolist()),
        partition_segments=tuple(seg.tolist()),
        entropy=entropy,
        entropy_density=entropy / order,
        degenerate=count < order,
        distinct_count=count,
    )


def coverage_grid(m: CoverMap, values: Iterable[float], orders: Iterable[int]) -> list[CoverageReport]:
    orders = list(orders)
    return [coverage_report(m, v, n) for v in values for n in orders]


CSV_COLUMNS = ("value", "order", "entropy", "entropy_density", "degenerate", "distinct_count")


def write_coverage_csv(path, reports: Iterable[CoverageReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.row())


def best_order_at(m: CoverMap, v: float, candidates: Sequence[int]) -> int:
    """Candidate with the highest entropy density at a single value (ties -> smaller)."""
    return select_order(m, [(v, 1.0)], candidates)


def select_order(m: CoverMap, value_histogram, candidate_orders: Sequence[int]) -> int:
    """Order maximizing the histogram-weighted mean entropy density.

    ``value_histogram`` is a sequence of (value, weight) pairs, e.g. bin
    centres and counts of a channel histogram.
    """
    candidates = sorted(set(int(n) for n in candidate_orders))
    if not candidates:
        raise DomainError("no candidate orders")
    pairs = [(float(v), float(w)) for v, w in value_histogram]
    weights = np.array([w for _, w in pairs])
    if np.any(weights < 0) or weights.sum() <= 0:
        raise DomainError("histogram weights must be non-negative with positive sum")
    values = [v for v, _ in pairs]
    best, best_score = candidates[0], -np.inf
    for n in candidates:
        dens = np.array([coverage_report(m, v, n).entropy_density for v in values])
        score = float((weights * dens).sum() / weights.sum())
        # strict comparison keeps the smaller order on ties
        if score > best_score + 1e-15:
            best, best_score = n, score
    return best


def channel_histogram(values: np.ndarray, bins: int = 32, c: float = 1.0) -> list[tuple[float, float]]:
    """(bin centre, count) pairs of channel values, the input to :func:`select_order`."""
    counts, edges = np.histogram(np.clip(np.ravel(values), 0.0, c), bins=bins, range=(0.0, c))
    centres = 0.5 * (edges[:-1] + edges[1:])
    return [(float(x), float(n)) for x, n in zip(centres, counts)]

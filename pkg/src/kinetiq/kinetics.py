"""Animation curves and color scales: the two per-layer lookup primitives.

Curves are periodic with period 1 and linear interpolation between
keyframes, including across the wrap from the last keyframe back to the
first. Color scales interpolate each RGBA channel independently in plain
component space; coincident stop positions form a hard step where the
later stop wins at the shared position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RAMP_EPS = 1.0 / 1024.0


@dataclass(frozen=True)
class Color:
    r: float
    g: float
    b: float
    a: float

    def __post_init__(self):
        for ch in (self.r, self.g, self.b, self.a):
            if not (0.0 <= ch <= 1.0):
                raise ValueError(f"color channel out of [0,1]: {ch}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.r, self.g, self.b, self.a)


CLEAR = Color(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class AnimationCurve:
    """Periodic piecewise-linear curve: keyframes (phase, value)."""

    keyframes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("curve needs at least one keyframe")
        prev = -1.0
        for t, v in self.keyframes:
            if not (0.0 <= t < 1.0):
                raise ValueError(f"keyframe phase out of [0,1): {t}")
            if t <= prev:
                raise ValueError("keyframe phases must be strictly increasing")
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"keyframe value out of [0,1]: {v}")
            prev = t


@dataclass(frozen=True)
class ColorScale:
    """RGBA gradient: stops (position, color), positions nondecreasing."""

    stops: tuple[tuple[float, Color], ...]

    def __post_init__(self):
        if not self.stops:
            raise ValueError("scale needs at least one stop")
        prev = 0.0
        for i, (pos, _) in enumerate(self.stops):
            if not (0.0 <= pos <= 1.0):
                raise ValueError(f"stop position out of [0,1]: {pos}")
            if i > 0 and pos < prev:
                raise ValueError("stop positions must be nondecreasing")
            prev = pos

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pos = np.array([p for p, _ in self.stops], dtype=np.float64)
        col = np.array([c.as_tuple() for _, c in self.stops], dtype=np.float64)
        return pos, col


def eval_curve(curve: AnimationCurve, t: float) -> float:
    """Curve value at time t; t is reduced mod 1 first."""
    phase = t % 1.0
    kf = curve.keyframes
    if len(kf) == 1:
        return kf[0][1]
    times = [k[0] for k in kf]
    # find the segment containing phase, wrapping last -> first+1
    if phase < times[0]:
        phase += 1.0
        i = len(kf) - 1
    else:
        i = len(kf) - 1
        for j in range(len(kf) - 1):
            if times[j] <= phase < times[j + 1]:
                i = j
                break
    t0, v0 = kf[i]
    if i == len(kf) - 1:
        t1, v1 = kf[0][0] + 1.0, kf[0][1]
    else:
        t1, v1 = kf[i + 1]
    f = (phase - t0) / (t1 - t0)
    return v0 + (v1 - v0) * f


def preset_curve(name: str, **params) -> AnimationCurve:
    """Built-in curves: flat(v), pulse(center, width), ramp()."""
    if name == "flat":
        v = float(params.get("v", params.get("value", 1.0)))
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"flat value out of [0,1]: {v}")
        return AnimationCurve(((0.0, v),))
    if name == "pulse":
        center = float(params.get("center", 0.5))
        width = float(params.get("width", 0.5))
        if not (0.0 <= center < 1.0):
            raise ValueError(f"pulse center out of [0,1): {center}")
        if not (0.0 < width <= 1.0):
            raise ValueError(f"pulse width out of (0,1]: {width}")
        lo = (center - width / 2.0) % 1.0
        hi = (center + width / 2.0) % 1.0
        points = {lo: 0.0, center: 1.0}
        if width < 1.0:
            points[hi] = 0.0
        keyframes = tuple(sorted(points.items()))
        return AnimationCurve(keyframes)
    if name == "ramp":
        return AnimationCurve(((0.0, 0.0), (1.0 - RAMP_EPS, 1.0)))
    raise ValueError(f"unknown preset curve '{name}'")


def sample_scale_array(scale: ColorScale, c: np.ndarray) -> np.ndarray:
    """Vectorized scale lookup: c (n,) -> colors (n, 4)."""
    pos, col = scale.arrays()
    c = np.clip(np.asarray(c, dtype=np.float64), 0.0, 1.0)
    if len(pos) == 1:
        return np.broadcast_to(col[0], (len(c), 4)).copy()
    # searchsorted 'right' makes the later of coincident stops win at the
    # shared position
    idx = np.searchsorted(pos, c, side="right") - 1
    idx = np.clip(idx, 0, len(pos) - 2)
    below = c < pos[0]
    above = c >= pos[-1]
    span = pos[idx + 1] - pos[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(span > 0.0, (c - pos[idx]) / np.where(span > 0, span, 1.0), 0.0)
    out = col[idx] + (col[idx + 1] - col[idx]) * f[:, None]
    out[below] = col[0]
    out[above] = col[-1]
    return out


def sample_scale(scale: ColorScale, c: float) -> Color:
    """Color at interpolation parameter c (clamped to [0,1])."""
    out = sample_scale_array(scale, np.array([c], dtype=np.float64))[0]
    return Color(*out.tolist())

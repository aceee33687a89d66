"""Layer evaluation: fold each data point through the ordered encoding
layers at time t, blending colors with Add / Multiply / Mask.

The fold is seeded with the zero color (0,0,0,0). Per layer the
interpolation parameter is c = clamp(A(t) * p * m, 0, 1), which indexes
the layer's color scale; the sampled color is then blended with the
running color. All evaluation is pure; bulk paths are vectorized with
numpy and agree bitwise with the scalar path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .data import Dataset, ParameterRef, ParameterRegistry, TurnPoint, parameter_value
from .kinetics import (
    CLEAR,
    AnimationCurve,
    Color,
    ColorScale,
    eval_curve,
    sample_scale_array,
)


class BlendMode(str, Enum):
    ADD = "add"
    MULTIPLY = "multiply"
    MASK = "mask"


@dataclass(frozen=True)
class EncodingLayer:
    curve: AnimationCurve
    scale: ColorScale
    parameter: ParameterRef
    mode: BlendMode
    multiplier: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.multiplier):
            raise ValueError("multiplier must be finite")


@dataclass(frozen=True)
class KineticQuery:
    layers: tuple[EncodingLayer, ...]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("query needs at least one layer")


@dataclass(frozen=True)
class LayerTrace:
    """Intermediates of one layer evaluation, for inspection and testing."""

    p: float
    a_t: float
    c: float
    sampled: Color
    blended: Color


@dataclass
class ColorBuffer:
    """Evaluated colors for every TurnPoint at one frame time."""

    t: float
    points: tuple[TurnPoint, ...]
    colors: np.ndarray  # (n_points, 4) float64, straight alpha

    def __len__(self) -> int:
        return len(self.points)

    def color_at(self, point: TurnPoint) -> Color:
        i = self.points.index(point)
        return Color(*self.colors[i].tolist())

    def as_dict(self) -> dict[TurnPoint, Color]:
        return {
            pt: Color(*row.tolist()) for pt, row in zip(self.points, self.colors)
        }


@dataclass
class FrameSet:
    n_frames: int
    buffers: list[ColorBuffer] = field(default_factory=list)


def blend(mode: BlendMode, prev: Color, cur: Color) -> Color:
    if mode is BlendMode.ADD:
        return Color(
            min(prev.r + cur.r, 1.0),
            min(prev.g + cur.g, 1.0),
            min(prev.b + cur.b, 1.0),
            min(prev.a + cur.a, 1.0),
        )
    if mode is BlendMode.MULTIPLY:
        return Color(prev.r * cur.r, prev.g * cur.g, prev.b * cur.b, prev.a * cur.a)
    # Mask: keep previous color channels, take the minimum alpha
    return Color(prev.r, prev.g, prev.b, min(prev.a, cur.a))


def _blend_arrays(mode: BlendMode, prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    if mode is BlendMode.ADD:
        return np.minimum(prev + cur, 1.0)
    if mode is BlendMode.MULTIPLY:
        return prev * cur
    out = prev.copy()
    out[:, 3] = np.minimum(prev[:, 3], cur[:, 3])
    return out


def evaluate_layer(
    prev: Color,
    layer: EncodingLayer,
    t: float,
    point: TurnPoint,
    dataset: Dataset,
    registry: ParameterRegistry,
) -> tuple[Color, LayerTrace]:
    p = parameter_value(point, layer.parameter, dataset, registry)
    a_t = eval_curve(layer.curve, t)
    c = min(max(a_t * p * layer.multiplier, 0.0), 1.0)
    sampled = sample_scale_array(layer.scale, np.array([c]))[0]
    sampled_color = Color(*sampled.tolist())
    blended = blend(layer.mode, prev, sampled_color)
    return blended, LayerTrace(p=p, a_t=a_t, c=c, sampled=sampled_color, blended=blended)


def evaluate_point(
    query: KineticQuery,
    t: float,
    point: TurnPoint,
    dataset: Dataset,
    registry: ParameterRegistry,
    traces: Optional[list[LayerTrace]] = None,
) -> Color:
    """Fold the point through every layer; pass a list to capture traces."""
    color = CLEAR
    for layer in query.layers:
        color, trace = evaluate_layer(color, layer, t, point, dataset, registry)
        if traces is not None:
            traces.append(trace)
    return color


def parameter_vector(
    ref: ParameterRef,
    points: list[TurnPoint],
    dataset: Dataset,
    registry: ParameterRegistry,
) -> np.ndarray:
    return np.array(
        [parameter_value(pt, ref, dataset, registry) for pt in points],
        dtype=np.float64,
    )


def evaluate_frame(
    query: KineticQuery,
    t: float,
    dataset: Dataset,
    registry: ParameterRegistry,
    _param_cache: Optional[dict[ParameterRef, np.ndarray]] = None,
) -> ColorBuffer:
    """One frame: every TurnPoint evaluated independently (vectorized)."""
    points = dataset.points()
    n = len(points)
    colors = np.zeros((n, 4), dtype=np.float64)
    for layer in query.layers:
        if _param_cache is not None and layer.parameter in _param_cache:
            p = _param_cache[layer.parameter]
        else:
            p = parameter_vector(layer.parameter, points, dataset, registry)
            if _param_cache is not None:
                _param_cache[layer.parameter] = p
        a_t = eval_curve(layer.curve, t)
        c = np.clip(a_t * p * layer.multiplier, 0.0, 1.0)
        sampled = sample_scale_array(layer.scale, c)
        colors = _blend_arrays(layer.mode, colors, sampled)
    return ColorBuffer(t=t % 1.0, points=tuple(points), colors=colors)


def evaluate_loop(
    query: KineticQuery,
    dataset: Dataset,
    registry: ParameterRegistry,
    n_frames: int,
) -> FrameSet:
    """The full loop: frames at t_k = k / n_frames."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    cache: dict[ParameterRef, np.ndarray] = {}
    buffers = [
        evaluate_frame(query, k / n_frames, dataset, registry, _param_cache=cache)
        for k in range(n_frames)
    ]
    return FrameSet(n_frames=n_frames, buffers=buffers)

"""Line-chart layout and rasterization.

Layout maps turn index to x and total votes to y (zero baseline, autoscaled
to the observed maximum unless overridden). Rasterization draws each
polyline with per-segment linear color gradients between the endpoint
colors from a ColorBuffer, composites polylines in dataset order with
straight-alpha "over", and anti-aliases by integer supersampling plus a
box filter.

Within one polyline, coverage is the union over its segments and each
covered pixel takes the gradient color of its nearest segment, so joints
are not double-composited; adjacent segments share endpoint colors, which
keeps the result continuous across joints.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset, ParameterRegistry
from .kinetics import Color
from .pipeline import ColorBuffer, KineticQuery, evaluate_loop

DEFAULT_WIDTH = 960
DEFAULT_HEIGHT = 540
DEFAULT_MARGIN = 48


@dataclass
class RenderConfig:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    margin: int = DEFAULT_MARGIN
    line_width: float = 2.0
    background: Color = field(default_factory=lambda: Color(1.0, 1.0, 1.0, 1.0))
    supersample: int = 2
    n_frames: int = 60
    fps: int = 30
    y_domain: Optional[tuple[float, float]] = None
    draw_axes: bool = True

    def validate(self) -> None:
        if self.width < 64 or self.height < 64:
            raise ValueError("width and height must be >= 64")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.fps < 1:
            raise ValueError("fps must be >= 1")
        if self.line_width < 1:
            raise ValueError("line_width must be >= 1")
        if self.supersample not in (1, 2, 4):
            raise ValueError("supersample must be 1, 2, or 4")
        if self.y_domain is not None and not self.y_domain[0] < self.y_domain[1]:
            raise ValueError("y_domain needs lo < hi")


@dataclass
class ChartGeometry:
    """Pixel-space polylines (one per playthrough) plus axis ticks."""

    polylines: list[np.ndarray]  # each (n_turns, 2) float64 pixel coords
    x_ticks: list[tuple[float, str]]
    y_ticks: list[tuple[float, str]]
    plot_box: tuple[float, float, float, float]  # x0, y0, x1, y1

    def point_offsets(self) -> list[int]:
        """Start index of each polyline's vertices in canonical point order."""
        offsets, total = [], 0
        for poly in self.polylines:
            offsets.append(total)
            total += len(poly)
        return offsets


@dataclass
class Image:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4) uint8, straight alpha

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 4):
            raise ValueError("pixel buffer shape mismatch")


def _ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw_step = span / target
    mag = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mag * mult
        if step >= raw_step:
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-9 * span:
        out.append(round(v, 10))
        v += step
    return out


def layout(dataset: Dataset, config: RenderConfig) -> ChartGeometry:
    """Place every playthrough's (turn, total_votes) series in pixel space."""
    config.validate()
    m = config.margin
    x0, y0 = float(m), float(m)
    x1, y1 = float(config.width - m), float(config.height - m)

    max_turn = max(
        t.turn_index for p in dataset.playthroughs for t in p.turns
    )
    if config.y_domain is not None:
        v_lo, v_hi = config.y_domain
    else:
        v_lo = 0.0
        v_hi = float(
            max(t.total_votes for p in dataset.playthroughs for t in p.turns)
        )
        if v_hi <= v_lo:
            v_hi = v_lo + 1.0

    x_span = max(max_turn, 1)
    polylines = []
    for p in dataset.playthroughs:
        pts = np.empty((len(p.turns), 2), dtype=np.float64)
        for i, t in enumerate(p.turns):
            pts[i, 0] = x0 + (t.turn_index / x_span) * (x1 - x0)
            pts[i, 1] = y1 - ((t.total_votes - v_lo) / (v_hi - v_lo)) * (y1 - y0)
        polylines.append(pts)

    x_ticks = [
        (x0 + (v / x_span) * (x1 - x0), str(int(v)))
        for v in _ticks(0, max_turn, target=min(10, max(max_turn, 1)))
        if v == int(v)
    ]
    y_ticks = [
        (y1 - ((v - v_lo) / (v_hi - v_lo)) * (y1 - y0), f"{v:g}")
        for v in _ticks(v_lo, v_hi)
    ]
    return ChartGeometry(
        polylines=polylines, x_ticks=x_ticks, y_ticks=y_ticks, plot_box=(x0, y0, x1, y1)
    )


class FrameRasterizer:
    """Per-frame renderer with geometry-dependent coverage precomputed once.

    Coverage masks and gradient parameters depend only on geometry and
    config, so a full loop reuses them across frames.
    """

    def __init__(self, geometry: ChartGeometry, config: RenderConfig):
        config.validate()
        self.geometry = geometry
        self.config = config
        s = config.supersample
        self.sw = config.width * s
        self.sh = config.height * s
        self._polys = [self._precompute(poly * s, config.line_width * s / 2.0)
                       for poly in geometry.polylines]
        self._offsets = geometry.point_offsets()
        self._axes_layer = self._axes() if config.draw_axes else None

    def _precompute(self, poly: np.ndarray, radius: float):
        """Covered supersample pixels for one polyline.

        Returns (flat_idx, seg_id, tt) where tt is the position along the
        owning segment in [0,1]; ownership is the nearest segment.
        """
        n = len(poly)
        if n == 0:
            return None
        if n == 1:
            segs = [(poly[0], poly[0])]
        else:
            segs = [(poly[i], poly[i + 1]) for i in range(n - 1)]

        flat_parts, dist_parts, seg_parts, tt_parts = [], [], [], []
        for si, (a, b) in enumerate(segs):
            xmin = max(int(math.floor(min(a[0], b[0]) - radius)), 0)
            xmax = min(int(math.ceil(max(a[0], b[0]) + radius)) + 1, self.sw)
            ymin = max(int(math.floor(min(a[1], b[1]) - radius)), 0)
            ymax = min(int(math.ceil(max(a[1], b[1]) + radius)) + 1, self.sh)
            if xmin >= xmax or ymin >= ymax:
                continue
            ys, xs = np.mgrid[ymin:ymax, xmin:xmax]
            px = xs + 0.5
            py = ys + 0.5
            dx, dy = b[0] - a[0], b[1] - a[1]
            ll = dx * dx + dy * dy
            if ll == 0.0:
                tt = np.zeros_like(px)
            else:
                tt = np.clip(((px - a[0]) * dx + (py - a[1]) * dy) / ll, 0.0, 1.0)
            cx = a[0] + tt * dx
            cy = a[1] + tt * dy
            dist = np.hypot(px - cx, py - cy)
            hit = dist <= radius
            if not hit.any():
                continue
            flat_parts.append((ys[hit] * self.sw + xs[hit]).ravel())
            dist_parts.append(dist[hit].ravel())
            seg_parts.append(np.full(int(hit.sum()), si, dtype=np.int64))
            tt_parts.append(tt[hit].ravel())
        if not flat_parts:
            return None
        flat = np.concatenate(flat_parts)
        d = np.concatenate(dist_parts)
        seg_all = np.concatenate(seg_parts)
        tt_all = np.concatenate(tt_parts)
        # nearest segment wins where coverage overlaps (joints)
        order = np.lexsort((d, flat))
        flat, d = flat[order], d[order]
        seg_all, tt_all = seg_all[order], tt_all[order]
        idx, first = np.unique(flat, return_index=True)
        return idx, seg_all[first], tt_all[first]

    def _axes(self) -> np.ndarray:
        """Opaque axis/tick strokes as an RGBA layer at supersample size."""
        s = self.config.supersample
        x0, y0, x1, y1 = (v * s for v in self.geometry.plot_box)
        layer = np.zeros((self.sh, self.sw, 4), dtype=np.float64)
        gray = np.array([0.35, 0.35, 0.35, 1.0])
        lw = max(1, s)

        def hline(y, xa, xb):
            yi = int(round(y))
            layer[max(yi, 0): min(yi + lw, self.sh),
                  max(int(round(xa)), 0): min(int(round(xb)), self.sw)] = gray

        def vline(x, ya, yb):
            xi = int(round(x))
            layer[max(int(round(ya)), 0): min(int(round(yb)), self.sh),
                  max(xi, 0): min(xi + lw, self.sw)] = gray

        hline(y1, x0, x1)
        vline(x0, y0, y1)
        tick = 4 * s
        for x, _ in self.geometry.x_ticks:
            vline(x * s, y1, y1 + tick)
        for y, _ in self.geometry.y_ticks:
            hline(y * s, x0 - tick, x0)
        return layer

    def render(self, buffer: ColorBuffer) -> Image:
        s = self.config.supersample
        bg = np.array(self.config.background.as_tuple(), dtype=np.float64)
        buf = np.empty((self.sh * self.sw, 4), dtype=np.float64)
        buf[:] = bg

        if self._axes_layer is not None:
            flat_axes = self._axes_layer.reshape(-1, 4)
            drawn = flat_axes[:, 3] > 0
            buf[drawn] = _over(flat_axes[drawn], buf[drawn])

        colors = buffer.colors
        for poly_i, pre in enumerate(self._polys):
            if pre is None:
                continue
            idx, seg, tt = pre
            off = self._offsets[poly_i]
            n_pts = len(self.geometry.polylines[poly_i])
            if n_pts == 1:
                c0 = colors[off][None, :]
                src = np.repeat(c0, len(idx), axis=0)
            else:
                c0 = colors[off + seg]
                c1 = colors[off + seg + 1]
                src = c0 + (c1 - c0) * tt[:, None]
            buf[idx] = _over(src, buf[idx])

        img = buf.reshape(self.sh, self.sw, 4)
        if s > 1:
            # box-downsample in premultiplied space so edge colors stay sane
            pm = img.copy()
            pm[..., :3] *= pm[..., 3:4]
            pm = pm.reshape(self.config.height, s, self.config.width, s, 4)
            pm = pm.mean(axis=(1, 3))
            a = pm[..., 3:4]
            rgb = np.divide(pm[..., :3], a, out=np.zeros_like(pm[..., :3]), where=a > 0)
            img = np.concatenate([rgb, a], axis=-1)
        out = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
        return Image(self.config.width, self.config.height, out)


def _over(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Straight-alpha source-over compositing, rowwise on (n,4) arrays."""
    sa = src[:, 3:4]
    da = dst[:, 3:4]
    oa = sa + da * (1.0 - sa)
    rgb_num = src[:, :3] * sa + dst[:, :3] * da * (1.0 - sa)
    rgb = np.divide(rgb_num, oa, out=np.zeros_like(rgb_num), where=oa > 0)
    return np.concatenate([rgb, oa], axis=1)


def rasterize_frame(
    geometry: ChartGeometry, buffer: ColorBuffer, config: RenderConfig
) -> Image:
    """One-shot rasterization; loops should reuse a FrameRasterizer."""
    return FrameRasterizer(geometry, config).render(buffer)


def render_frames(
    dataset: Dataset, frame_set, config: RenderConfig
) -> list[Image]:
    """Rasterize a whole FrameSet, reusing precomputed coverage.

    KINETIQ_THREADS caps worker threads used across frames (default 1);
    output order and bytes are identical regardless.
    """
    geometry = layout(dataset, config)
    rasterizer = FrameRasterizer(geometry, config)
    threads = int(os.environ.get("KINETIQ_THREADS", "1") or "1")
    buffers = frame_set.buffers
    if threads > 1 and len(buffers) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(rasterizer.render, buffers))
    return [rasterizer.render(b) for b in buffers]


def render_animation(
    dataset: Dataset,
    registry: ParameterRegistry,
    query: KineticQuery,
    config: RenderConfig,
) -> list[Image]:
    """Evaluate the loop and rasterize every frame (shared by CLI and service)."""
    frame_set = evaluate_loop(query, dataset, registry, config.n_frames)
    return render_frames(dataset, frame_set, config)

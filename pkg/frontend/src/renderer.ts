// Animation View canvas drawing. Colors come straight from the cached
// evaluate response; no encoding math happens on the client.

import type { Geometry, Rgba } from "./api";

// The slice of CanvasRenderingContext2D we use, so tests can substitute a
// recording mock.
export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  createLinearGradient(
    x0: number,
    y0: number,
    x1: number,
    y1: number,
  ): CanvasGradient;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  lineCap: string;
  font: string;
}

export const NEUTRAL_STROKE = "rgba(128,128,128,0.6)";

export function cssColor(c: Rgba): string {
  const r = Math.round(c[0] * 255);
  const g = Math.round(c[1] * 255);
  const b = Math.round(c[2] * 255);
  return `rgba(${r},${g},${b},${c[3]})`;
}

function sameColor(a: Rgba, b: Rgba): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2] && a[3] === b[3];
}

export interface DrawOptions {
  width: number;
  height: number;
  lineWidth: number;
}

/**
 * Draw every polyline with per-segment color taken from the frame. Segments
 * whose endpoints share a color stroke with a plain style; only segments
 * that actually change color pay for a gradient.
 */
export function drawFrame(
  ctx: Ctx2D,
  geometry: Geometry,
  frame: Rgba[] | null,
  opts: DrawOptions,
): void {
  ctx.clearRect(0, 0, opts.width, opts.height);
  ctx.lineWidth = opts.lineWidth;
  ctx.lineCap = "round";

  let offset = 0;
  for (const poly of geometry.polylines) {
    if (poly.length === 1) {
      const color = frame ? cssColor(frame[offset]) : NEUTRAL_STROKE;
      ctx.beginPath();
      ctx.arc(poly[0][0], poly[0][1], opts.lineWidth / 2, 0, Math.PI * 2);
      ctx.fillStyle = color;
      ctx.fill();
      offset += 1;
      continue;
    }
    for (let i = 0; i < poly.length - 1; i++) {
      const [x0, y0] = poly[i];
      const [x1, y1] = poly[i + 1];
      let style: string | CanvasGradient = NEUTRAL_STROKE;
      if (frame) {
        const c0 = frame[offset + i];
        const c1 = frame[offset + i + 1];
        if (c0[3] === 0 && c1[3] === 0) continue; // invisible segment
        if (sameColor(c0, c1)) {
          style = cssColor(c0);
        } else {
          const grad = ctx.createLinearGradient(x0, y0, x1, y1);
          grad.addColorStop(0, cssColor(c0));
          grad.addColorStop(1, cssColor(c1));
          style = grad;
        }
      }
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.strokeStyle = style;
      ctx.stroke();
    }
    offset += poly.length;
  }

  if (!frame) {
    ctx.font = "13px sans-serif";
    ctx.fillStyle = "#888";
    ctx.fillText("evaluating…", 12, 20);
  }
}

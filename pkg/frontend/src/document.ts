// Editable query document. Panel order in the Encoding View is this array's
// order: panel 0 is layer 0, the first layer folded into the blend.

import type { BlendMode, LayerSpec, QuerySpec, Rgba } from "./api";

export interface LayerModel {
  id: number;
  parameter: string;
  keyframes: [number, number][];
  stops: [number, Rgba][];
  blend: BlendMode;
  multiplier: number;
  collapsed: boolean;
}

let nextLayerId = 1;

export function defaultLayer(): LayerModel {
  return {
    id: nextLayerId++,
    parameter: "baseline",
    keyframes: [[0, 1]],
    stops: [
      [0, [0, 0, 0, 0]],
      [1, [1, 1, 1, 1]],
    ],
    blend: "add",
    multiplier: 1,
    collapsed: false,
  };
}

const clamp01 = (v: number) => Math.min(Math.max(v, 0), 1);

export class QueryDocument {
  layers: LayerModel[] = [];

  addLayer(layer: LayerModel = defaultLayer()): LayerModel {
    this.layers.push(layer);
    return layer;
  }

  removeLayer(id: number): void {
    this.layers = this.layers.filter((l) => l.id !== id);
  }

  moveLayer(id: number, toIndex: number): void {
    const from = this.layers.findIndex((l) => l.id === id);
    if (from < 0) return;
    const to = Math.min(Math.max(toIndex, 0), this.layers.length - 1);
    const [layer] = this.layers.splice(from, 1);
    this.layers.splice(to, 0, layer);
  }

  layer(id: number): LayerModel | undefined {
    return this.layers.find((l) => l.id === id);
  }

  // Dragging a keyframe handle outside the editor clamps to the unit square;
  // phases stay strictly increasing by nudging against the neighbours.
  setKeyframe(id: number, index: number, phase: number, value: number): void {
    const layer = this.layer(id);
    if (!layer || index < 0 || index >= layer.keyframes.length) return;
    const eps = 1 / 1024;
    let p = Math.min(Math.max(phase, 0), 1 - eps);
    const prev = layer.keyframes[index - 1];
    const next = layer.keyframes[index + 1];
    if (prev) p = Math.max(p, prev[0] + eps);
    if (next) p = Math.min(p, next[0] - eps);
    layer.keyframes[index] = [p, clamp01(value)];
  }

  setStopColor(id: number, index: number, rgba: Rgba): void {
    const layer = this.layer(id);
    if (!layer || index < 0 || index >= layer.stops.length) return;
    layer.stops[index] = [
      layer.stops[index][0],
      rgba.map(clamp01) as Rgba,
    ];
  }

  toQuery(): QuerySpec {
    return { layers: this.layers.map(toLayerSpec) };
  }
}

function toLayerSpec(layer: LayerModel): LayerSpec {
  return {
    parameter: layer.parameter,
    curve: { keyframes: layer.keyframes.map(([p, v]) => [p, v]) },
    scale: { stops: layer.stops.map(([p, c]) => [p, [...c] as Rgba]) },
    blend: layer.blend,
    multiplier: layer.multiplier,
  };
}

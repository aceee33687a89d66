// Encoding View: one collapsible panel per layer, top panel = layer 0.
// Each panel edits the layer's parameter, curve, color scale, blend mode and
// multiplier; server diagnostics render inline at the offending panel.

import type { BlendMode, Diagnostic, Rgba } from "./api";
import { cssColor } from "./renderer";
import { QueryDocument, defaultLayer, LayerModel } from "./document";

const BLEND_MODES: BlendMode[] = ["add", "multiply", "mask"];

export class PanelList {
  constructor(
    private root: HTMLElement,
    private doc: QueryDocument,
    private parameterNames: () => string[],
    private onEdit: () => void,
  ) {}

  /** Rebuild the panel DOM from the document; order mirrors layer order. */
  render(diagnostics: Diagnostic[] = []): void {
    this.root.textContent = "";
    this.doc.layers.forEach((layer, index) => {
      this.root.appendChild(this.buildPanel(layer, index, diagnostics));
    });
    const add = document.createElement("button");
    add.className = "add-layer";
    add.textContent = "+ layer";
    add.addEventListener("click", () => {
      this.doc.addLayer(defaultLayer());
      this.onEdit();
      this.render();
    });
    this.root.appendChild(add);
  }

  panelLayerIds(): number[] {
    return Array.from(this.root.querySelectorAll<HTMLElement>(".layer-panel")).map(
      (el) => Number(el.dataset.layerId),
    );
  }

  private buildPanel(
    layer: LayerModel,
    index: number,
    diagnostics: Diagnostic[],
  ): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "layer-panel";
    panel.dataset.layerId = String(layer.id);

    panel.appendChild(this.buildHeader(layer, index));
    if (!layer.collapsed) {
      const body = document.createElement("div");
      body.className = "panel-body";
      body.appendChild(this.buildParameterSelect(layer));
      body.appendChild(this.buildScaleEditor(layer));
      body.appendChild(this.buildBlendSelect(layer));
      body.appendChild(this.buildMultiplierInput(layer));
      panel.appendChild(body);
    }

    const mine = diagnostics.filter((d) =>
      d.path.startsWith(`/layers/${index}/`) || d.path === `/layers/${index}`,
    );
    if (mine.length > 0) {
      const list = document.createElement("ul");
      list.className = "diagnostics";
      for (const d of mine) {
        const item = document.createElement("li");
        item.className = `diagnostic ${d.severity}`;
        item.textContent = `${d.path}: ${d.message}`;
        list.appendChild(item);
      }
      panel.appendChild(list);
    }
    return panel;
  }

  private buildHeader(layer: LayerModel, index: number): HTMLElement {
    const header = document.createElement("header");
    const title = document.createElement("span");
    title.className = "panel-title";
    title.textContent = `${index + 1}. ${layer.parameter} (${layer.blend})`;
    title.addEventListener("click", () => {
      layer.collapsed = !layer.collapsed;
      this.render();
    });
    header.appendChild(title);
    header.appendChild(
      this.headerButton("move-up", "↑", () => {
        this.doc.moveLayer(layer.id, index - 1);
        this.onEdit();
        this.render();
      }),
    );
    header.appendChild(
      this.headerButton("move-down", "↓", () => {
        this.doc.moveLayer(layer.id, index + 1);
        this.onEdit();
        this.render();
      }),
    );
    header.appendChild(
      this.headerButton("remove", "×", () => {
        this.doc.removeLayer(layer.id);
        this.onEdit();
        this.render();
      }),
    );
    return header;
  }

  private headerButton(
    cls: string,
    label: string,
    onClick: () => void,
  ): HTMLButtonElement {
    const btn = document.createElement("button");
    btn.className = cls;
    btn.textContent = label;
    btn.addEventListener("click", onClick);
    return btn;
  }

  private buildParameterSelect(layer: LayerModel): HTMLElement {
    const select = document.createElement("select");
    select.className = "parameter-select";
    for (const name of this.parameterNames()) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      opt.selected = name === layer.parameter;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      layer.parameter = select.value;
      this.onEdit();
    });
    return select;
  }

  // The scale preview splits into two strips: the top one shows the color
  // channels over an opaque background, the bottom one shows only the
  // transparency channel as a gray ramp.
  private buildScaleEditor(layer: LayerModel): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "scale-editor";

    const colorStrip = document.createElement("div");
    colorStrip.className = "scale-strip scale-strip-color";
    colorStrip.style.background = stripGradient(layer.stops, (c) => [
      c[0],
      c[1],
      c[2],
      1,
    ]);

    const alphaStrip = document.createElement("div");
    alphaStrip.className = "scale-strip scale-strip-alpha";
    alphaStrip.style.background = stripGradient(layer.stops, (c) => [
      c[3],
      c[3],
      c[3],
      1,
    ]);

    wrap.appendChild(colorStrip);
    wrap.appendChild(alphaStrip);
    return wrap;
  }

  private buildBlendSelect(layer: LayerModel): HTMLElement {
    const select = document.createElement("select");
    select.className = "blend-select";
    for (const mode of BLEND_MODES) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      opt.selected = mode === layer.blend;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      layer.blend = select.value as BlendMode;
      this.onEdit();
    });
    return select;
  }

  private buildMultiplierInput(layer: LayerModel): HTMLElement {
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.1";
    input.className = "multiplier-input";
    input.value = String(layer.multiplier);
    input.addEventListener("input", () => {
      const value = Number(input.value);
      if (Number.isFinite(value)) {
        layer.multiplier = value;
        this.onEdit();
      }
    });
    return input;
  }
}

function stripGradient(
  stops: [number, Rgba][],
  project: (c: Rgba) => Rgba,
): string {
  const parts = stops.map(
    ([pos, c]) => `${cssColor(project(c))} ${(pos * 100).toFixed(1)}%`,
  );
  if (parts.length === 1) return cssColor(project(stops[0][1]));
  return `linear-gradient(to right, ${parts.join(", ")})`;
}

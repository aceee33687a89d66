// @vitest-environment jsdom
import { describe, expect, it } from "vitest";
import { PanelList } from "../src/panels";
import { QueryDocument, defaultLayer } from "../src/document";

function setup(nLayers = 3) {
  const doc = new QueryDocument();
  for (let i = 0; i < nLayers; i++) doc.addLayer(defaultLayer());
  const root = document.createElement("div");
  let edits = 0;
  const panels = new PanelList(root, doc, () => ["baseline", "duration"], () => {
    edits += 1;
  });
  panels.render();
  return { doc, root, panels, edits: () => edits };
}

function click(el: Element | null) {
  expect(el).not.toBeNull();
  (el as HTMLElement).dispatchEvent(new MouseEvent("click"));
}

describe("scale editor", () => {
  it("shows color and transparency as separate strips", () => {
    const { doc, panels, root } = setup(1);
    // constant red hue fading in: the color strip stays red while the
    // transparency strip ramps black to white
    doc.layers[0].stops = [
      [0, [1, 0, 0, 0]],
      [1, [1, 0, 0, 1]],
    ];
    panels.render();
    const editor = root.querySelector(".scale-editor")!;
    const colorStrip = editor.querySelector(".scale-strip-color");
    const alphaStrip = editor.querySelector(".scale-strip-alpha");
    expect(colorStrip).not.toBeNull();
    expect(alphaStrip).not.toBeNull();
    expect(colorStrip).not.toBe(alphaStrip);
    // the color strip previews channels fully opaque; the alpha strip
    // previews transparency as a gray ramp
    const colorBg = (colorStrip as HTMLElement).style.background;
    const alphaBg = (alphaStrip as HTMLElement).style.background;
    expect(colorBg).not.toEqual(alphaBg);
  });
});

describe("panel order", () => {
  it("mirrors layer order after add, reorder and remove", () => {
    const { doc, root, panels } = setup(2);
    click(root.querySelector(".add-layer"));
    expect(panels.panelLayerIds()).toEqual(doc.layers.map((l) => l.id));

    // move the last panel up
    const panelsEls = root.querySelectorAll(".layer-panel");
    click(panelsEls[panelsEls.length - 1].querySelector(".move-up"));
    expect(panels.panelLayerIds()).toEqual(doc.layers.map((l) => l.id));

    click(root.querySelector(".layer-panel .remove"));
    expect(panels.panelLayerIds()).toEqual(doc.layers.map((l) => l.id));
  });

  it("stays a bijection over random operation sequences", () => {
    // model-based: mirror every UI action against a plain array of ids
    const { doc, root, panels } = setup(1);
    let model = doc.layers.map((l) => l.id);
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };

    for (let step = 0; step < 120; step++) {
      const els = () => root.querySelectorAll(".layer-panel");
      const op = rand();
      if (op < 0.35 || model.length === 0) {
        click(root.querySelector(".add-layer"));
        model.push(doc.layers[doc.layers.length - 1].id);
      } else if (op < 0.6 && model.length > 1) {
        const i = Math.floor(rand() * model.length);
        const up = rand() < 0.5;
        if (up) {
          click(els()[i].querySelector(".move-up"));
          const j = Math.max(i - 1, 0);
          const [id] = model.splice(i, 1);
          model.splice(j, 0, id);
        } else {
          click(els()[i].querySelector(".move-down"));
          const j = Math.min(i + 1, model.length - 1);
          const [id] = model.splice(i, 1);
          model.splice(j, 0, id);
        }
      } else {
        const i = Math.floor(rand() * model.length);
        click(els()[i].querySelector(".remove"));
        model.splice(i, 1);
      }
      expect(panels.panelLayerIds()).toEqual(model);
      expect(doc.layers.map((l) => l.id)).toEqual(model);
    }
  });

  it("top panel edits layer 0", () => {
    const { doc, root } = setup(2);
    const select = root.querySelector<HTMLSelectElement>(
      ".layer-panel .blend-select",
    )!;
    select.value = "mask";
    select.dispatchEvent(new Event("change"));
    expect(doc.layers[0].blend).toBe("mask");
    expect(doc.layers[1].blend).toBe("add");
  });
});

describe("edits", () => {
  it("every edit notifies the evaluate loop", () => {
    const { root, edits } = setup(1);
    const select = root.querySelector<HTMLSelectElement>(".parameter-select")!;
    select.value = "duration";
    select.dispatchEvent(new Event("change"));
    const input = root.querySelector<HTMLInputElement>(".multiplier-input")!;
    input.value = "2.5";
    input.dispatchEvent(new Event("input"));
    expect(edits()).toBe(2);
  });

  it("renders server diagnostics inline at the offending panel", () => {
    const { panels, root } = setup(2);
    panels.render([
      {
        severity: "error",
        message: "district 9 out of range 1..4",
        path: "/layers/1/parameter",
      },
    ]);
    const panelEls = root.querySelectorAll(".layer-panel");
    expect(panelEls[0].querySelector(".diagnostic")).toBeNull();
    const diag = panelEls[1].querySelector(".diagnostic");
    expect(diag).not.toBeNull();
    expect(diag!.textContent).toContain("district 9");
  });
});

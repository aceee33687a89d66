import { ApiClient, ApiError, Diagnostic, Geometry } from "./api";
import { EvaluateController } from "./controller";
import { QueryDocument, defaultLayer } from "./document";
import { PanelList } from "./panels";
import { PlaybackState } from "./playback";
import { drawFrame } from "./renderer";

const N_FRAMES = 60;

const canvas = document.getElementById("chart") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const panelRoot = document.getElementById("panels") as HTMLElement;
const datasetInput = document.getElementById("dataset-file") as HTMLInputElement;
const playButton = document.getElementById("play") as HTMLButtonElement;
const scrubBar = document.getElementById("scrub") as HTMLInputElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const statusLine = document.getElementById("status") as HTMLElement;

const api = new ApiClient();
const doc = new QueryDocument();
doc.addLayer(defaultLayer());
const playback = new PlaybackState();

let datasetId: string | null = null;
let parameterNames: string[] = ["baseline"];
let geometry: Geometry | null = null;
let diagnostics: Diagnostic[] = [];

const controller = new EvaluateController(
  () => {
    if (!datasetId) return Promise.reject(new Error("no dataset loaded"));
    return api.evaluate(datasetId, doc.toQuery(), N_FRAMES, geometry === null);
  },
  (resp) => {
    if (resp.geometry) geometry = resp.geometry;
    playback.offer(resp);
    diagnostics = [];
    panels.render();
    statusLine.textContent = `${resp.point_index.length} points, ${resp.n_frames} frames`;
  },
  (err) => {
    if (err instanceof ApiError && err.diagnostics.length > 0) {
      diagnostics = err.diagnostics;
      panels.render(diagnostics);
    } else {
      statusLine.textContent = String(err);
    }
  },
);

const panels = new PanelList(panelRoot, doc, () => parameterNames, () => {
  playback.markStale();
  controller.edit();
});
panels.render();

datasetInput.addEventListener("change", async () => {
  const file = datasetInput.files?.[0];
  if (!file) return;
  try {
    const summary = await api.uploadDataset(await file.text());
    datasetId = summary.dataset_id;
    geometry = null;
    const info = await api.parameters(datasetId);
    parameterNames = Object.keys(info.parameters);
    panels.render();
    statusLine.textContent = `${summary.playthroughs} playthroughs, ${summary.district_count} districts`;
    controller.flush();
  } catch (err) {
    statusLine.textContent = String(err);
  }
});

playButton.addEventListener("click", () => {
  playback.playing = !playback.playing;
  playButton.textContent = playback.playing ? "pause" : "play";
});

scrubBar.addEventListener("input", () => {
  playback.playing = false;
  playButton.textContent = "play";
  playback.seek(Number(scrubBar.value));
});

exportButton.addEventListener("click", async () => {
  if (!datasetId) return;
  const blob = await api.renderAnimation(datasetId, doc.toQuery(), {
    n_frames: N_FRAMES,
  });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = "animation.png";
  a.click();
  URL.revokeObjectURL(url);
});

let lastTime = performance.now();
function frame(now: number) {
  const elapsed = (now - lastTime) / 1000;
  lastTime = now;
  playback.tick(elapsed);
  if (playback.playing) scrubBar.value = playback.t.toFixed(3);
  if (geometry) {
    drawFrame(ctx, geometry, playback.currentFrame(), {
      width: canvas.width,
      height: canvas.height,
      lineWidth: 2,
    });
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

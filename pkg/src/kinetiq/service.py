"""HTTP API for the workbench UI: dataset upload and introspection plus
frame evaluation and raster export.

The server owns all encoding math; the UI only draws the colors it gets
back. Datasets are stored in memory keyed by content hash (uploads are
idempotent) and can optionally be persisted to a directory.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import json

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .data import Dataset, DatasetError, ParameterRegistry, build_registry, parse_dataset
from .encode import encode_apng
from .pipeline import evaluate_loop
from .queryspec import Diagnostic, parse_query_obj, validate_against
from .render import RenderConfig, layout, render_animation

MAX_UPLOAD_BYTES = 64 * 1024 * 1024
MAX_FRAMES = 240
COLOR_DECIMALS = 4

_COLOR_STEPS = 10 ** COLOR_DECIMALS
# every representable wire value as its shortest decimal spelling
_COLOR_LUT = np.array(
    ["0"]
    + [
        (f"%.{COLOR_DECIMALS}f" % (i / _COLOR_STEPS)).rstrip("0").rstrip(".")
        for i in range(1, _COLOR_STEPS)
    ]
    + ["1"]
)


def _frames_json(buffers) -> str:
    """Frame colors as a JSON array literal, quantized to COLOR_DECIMALS.

    Equivalent to json.dumps of np.round(colors, COLOR_DECIMALS).tolist()
    but built from a fixed-point string table, which keeps the evaluate
    endpoint inside its latency budget at full load.
    """
    colors = np.stack([buf.colors for buf in buffers])
    n_frames, n_points = colors.shape[0], colors.shape[1]
    ints = np.rint(
        np.clip(colors.reshape(-1, 4), 0.0, 1.0) * _COLOR_STEPS
    ).astype(np.intp)
    cells = _COLOR_LUT[ints]
    row = np.char.add(np.char.add("[", cells[:, 0]), ",")
    row = np.char.add(np.char.add(row, cells[:, 1]), ",")
    row = np.char.add(np.char.add(row, cells[:, 2]), ",")
    row = np.char.add(np.char.add(row, cells[:, 3]), "]")
    rows = row.reshape(n_frames, n_points)
    return (
        "["
        + ",".join("[" + ",".join(r.tolist()) + "]" for r in rows)
        + "]"
    )


@dataclass
class StoredDataset:
    dataset_id: str
    raw: bytes
    dataset: Dataset
    registry: ParameterRegistry

    def summary(self) -> dict:
        ds = self.dataset
        return {
            "dataset_id": self.dataset_id,
            "level": ds.level,
            "playthroughs": len(ds.playthroughs),
            "district_count": ds.district_count,
            "action_vocabulary": list(ds.action_vocabulary),
            "points": len(ds.points()),
        }


class DatasetStore:
    """Content-addressed, insert-only; safe for concurrent readers."""

    def __init__(self, data_dir: Optional[Path] = None):
        self._lock = threading.Lock()
        self._by_id: dict[str, StoredDataset] = {}
        self._data_dir = Path(data_dir) if data_dir else None
        if self._data_dir and self._data_dir.is_dir():
            for path in sorted(self._data_dir.glob("*.jsonl")):
                try:
                    self.add(path.read_bytes(), persist=False)
                except DatasetError:
                    pass

    def add(self, raw: bytes, persist: bool = True) -> StoredDataset:
        dataset_id = hashlib.sha256(raw).hexdigest()[:16]
        with self._lock:
            if dataset_id in self._by_id:
                return self._by_id[dataset_id]
        dataset = parse_dataset(raw.decode("utf-8"))
        registry = build_registry(dataset)
        entry = StoredDataset(dataset_id, raw, dataset, registry)
        with self._lock:
            self._by_id.setdefault(dataset_id, entry)
        if persist and self._data_dir:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            (self._data_dir / f"{dataset_id}.jsonl").write_bytes(raw)
        return entry

    def get(self, dataset_id: str) -> Optional[StoredDataset]:
        with self._lock:
            return self._by_id.get(dataset_id)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._by_id)


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=json.dumps(payload, separators=(",", ":")),
        status_code=status_code,
        media_type="application/json",
    )


def _diag_response(diags, status_code: int = 400) -> Response:
    return _json_response(
        {
            "diagnostics": [
                {"severity": d.severity, "message": d.message, "path": d.path}
                for d in diags
            ]
        },
        status_code,
    )


def _error(message: str, status_code: int) -> Response:
    return _json_response({"error": message}, status_code)


def _geometry_json(geometry) -> dict:
    return {
        "polylines": [np.round(p, 2).tolist() for p in geometry.polylines],
        "x_ticks": [[x, label] for x, label in geometry.x_ticks],
        "y_ticks": [[y, label] for y, label in geometry.y_ticks],
        "plot_box": list(geometry.plot_box),
    }


def _parse_request_query(body: dict, entry: StoredDataset):
    """Shared evaluate/render request handling; returns (doc, error_response)."""
    query_obj = body.get("query")
    if not isinstance(query_obj, dict) or "layers" not in query_obj:
        return None, _error("request needs query.layers", 400)
    doc, diags = parse_query_obj(
        {"layers": query_obj["layers"], "render": body.get("render")}
    )
    if doc is None:
        return None, _diag_response(diags)
    val = validate_against(doc, entry.registry)
    if any(d.severity == "error" for d in val):
        return None, _diag_response(val)
    return doc, None


def create_app(data_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="kinetiq", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = DatasetStore(data_dir)
    app.state.store = store

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/datasets")
    async def upload_dataset(request: Request):
        raw = await request.body()
        if len(raw) > MAX_UPLOAD_BYTES:
            return _error("upload exceeds size cap", 413)
        try:
            entry = store.add(raw)
        except DatasetError as e:
            return _diag_response([Diagnostic("error", str(e), "")])
        return _json_response(
            {"dataset_id": entry.dataset_id, "summary": entry.summary()}, 201
        )

    @app.get("/api/datasets")
    def list_datasets():
        entries = [store.get(i).summary() for i in store.ids()]
        return {"datasets": entries}

    @app.get("/api/datasets/{dataset_id}/parameters")
    def parameters(dataset_id: str):
        entry = store.get(dataset_id)
        if entry is None:
            return _error(f"unknown dataset '{dataset_id}'", 404)
        return _json_response(
            {
                "dataset_id": dataset_id,
                "district_count": entry.registry.district_count,
                "action_vocabulary": list(entry.registry.action_vocabulary),
                "parameters": entry.registry.as_json(),
            }
        )

    @app.post("/api/evaluate")
    async def evaluate(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error("invalid JSON body", 400)
        entry = store.get(str(body.get("dataset_id", "")))
        if entry is None:
            return _error(f"unknown dataset '{body.get('dataset_id')}'", 404)
        n_frames = body.get("n_frames", 60)
        if not isinstance(n_frames, int) or not (1 <= n_frames <= MAX_FRAMES):
            return _error(f"n_frames must be in [1, {MAX_FRAMES}]", 400)
        doc, err = _parse_request_query(body, entry)
        if err is not None:
            return err

        frame_set = evaluate_loop(
            doc.query, entry.dataset, entry.registry, n_frames
        )
        payload = {
            "dataset_id": entry.dataset_id,
            "n_frames": n_frames,
            "point_index": [
                [pt.playthrough, pt.turn_index]
                for pt in frame_set.buffers[0].points
            ],
        }
        if body.get("include_geometry"):
            payload["geometry"] = _geometry_json(
                layout(entry.dataset, doc.render)
            )
        head = json.dumps(payload, separators=(",", ":"))
        content = head[:-1] + ',"frames":' + _frames_json(frame_set.buffers) + "}"
        return Response(content=content, media_type="application/json")

    @app.post("/api/render")
    async def render(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error("invalid JSON body", 400)
        entry = store.get(str(body.get("dataset_id", "")))
        if entry is None:
            return _error(f"unknown dataset '{body.get('dataset_id')}'", 404)
        doc, err = _parse_request_query(body, entry)
        if err is not None:
            return err
        if doc.render.n_frames > MAX_FRAMES:
            return _error(f"n_frames must be <= {MAX_FRAMES}", 400)
        images = render_animation(
            entry.dataset, entry.registry, doc.query, doc.render
        )
        return Response(
            content=encode_apng(images, doc.render.fps), media_type="image/png"
        )

    return app

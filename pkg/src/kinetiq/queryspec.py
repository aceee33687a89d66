"""The declarative query document: parse, validate, and canonically
serialize a layer stack plus render settings.

The same JSON document is both the CLI file format and the service wire
format. Errors reject the document and carry JSON-pointer-style locators;
warnings (unknown fields, first-layer multiply/mask) never block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .data import ParameterRef
from .kinetics import AnimationCurve, Color, ColorScale, preset_curve
from .pipeline import BlendMode, EncodingLayer, KineticQuery
from .render import RenderConfig

_RENDER_KEYS = {
    "width", "height", "margin", "line_width", "background",
    "supersample", "n_frames", "fps", "y_domain", "draw_axes",
}
_LAYER_KEYS = {"curve", "scale", "parameter", "blend", "multiplier"}
_TOP_KEYS = {"dataset", "meta", "render", "layers"}
_PRESET_PARAMS = {
    "flat": {"name", "v", "value"},
    "pulse": {"name", "center", "width"},
    "ramp": {"name"},
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    path: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.path}: {self.message}"


@dataclass
class QueryDocument:
    dataset_ref: str
    query: KineticQuery
    render: RenderConfig
    meta: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, QueryDocument):
            return NotImplemented
        return (
            self.dataset_ref == other.dataset_ref
            and self.query == other.query
            and self.render == other.render
            and self.meta == other.meta
        )


class _Collector:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def error(self, path: str, message: str):
        self.diags.append(Diagnostic("error", message, path))

    def warning(self, path: str, message: str):
        self.diags.append(Diagnostic("warning", message, path))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diags)


def _parse_curve(obj: Any, path: str, out: _Collector) -> Optional[AnimationCurve]:
    if not isinstance(obj, dict):
        out.error(path, "curve must be an object with 'preset' or 'keyframes'")
        return None
    if "preset" in obj:
        spec = obj["preset"]
        if not isinstance(spec, dict) or "name" not in spec:
            out.error(path + "/preset", "preset needs a 'name'")
            return None
        name = spec["name"]
        if name not in _PRESET_PARAMS:
            out.error(
                path + "/preset/name",
                f"unknown preset '{name}' (allowed: flat, pulse, ramp)",
            )
            return None
        for k in set(spec) - _PRESET_PARAMS[name]:
            out.warning(path + f"/preset/{k}", f"unknown preset field '{k}'")
        try:
            return preset_curve(
                name, **{k: v for k, v in spec.items()
                         if k != "name" and k in _PRESET_PARAMS[name]}
            )
        except (ValueError, TypeError) as e:
            out.error(path + "/preset", str(e))
            return None
    if "keyframes" in obj:
        kfs = obj["keyframes"]
        if not isinstance(kfs, list) or not kfs:
            out.error(path + "/keyframes", "keyframes must be a nonempty list")
            return None
        pairs = []
        for i, kf in enumerate(kfs):
            if (
                not isinstance(kf, list)
                or len(kf) != 2
                or not all(isinstance(x, (int, float)) for x in kf)
            ):
                out.error(path + f"/keyframes/{i}", "keyframe must be [t, v]")
                return None
            pairs.append((float(kf[0]), float(kf[1])))
        try:
            return AnimationCurve(tuple(pairs))
        except ValueError as e:
            out.error(path + "/keyframes", str(e))
            return None
    out.error(path, "curve needs 'preset' or 'keyframes'")
    return None


def _parse_scale(obj: Any, path: str, out: _Collector) -> Optional[ColorScale]:
    if not isinstance(obj, dict) or "stops" not in obj:
        out.error(path, "scale must be an object with 'stops'")
        return None
    stops = obj["stops"]
    if not isinstance(stops, list) or not stops:
        out.error(path + "/stops", "stops must be a nonempty list")
        return None
    parsed = []
    for i, stop in enumerate(stops):
        spath = path + f"/stops/{i}"
        if (
            not isinstance(stop, list)
            or len(stop) != 2
            or not isinstance(stop[0], (int, float))
            or not isinstance(stop[1], list)
            or len(stop[1]) != 4
            or not all(isinstance(x, (int, float)) for x in stop[1])
        ):
            out.error(spath, "stop must be [position, [r, g, b, a]]")
            return None
        try:
            parsed.append((float(stop[0]), Color(*map(float, stop[1]))))
        except ValueError as e:
            out.error(spath, str(e))
            return None
    try:
        return ColorScale(tuple(parsed))
    except ValueError as e:
        out.error(path + "/stops", str(e))
        return None


def _parse_layer(obj: Any, path: str, out: _Collector) -> Optional[EncodingLayer]:
    if not isinstance(obj, dict):
        out.error(path, "layer must be an object")
        return None
    for k in set(obj) - _LAYER_KEYS:
        out.warning(path + f"/{k}", f"unknown layer field '{k}'")
    missing = {"curve", "scale", "parameter", "blend"} - set(obj)
    if missing:
        out.error(path, f"layer missing fields: {', '.join(sorted(missing))}")
        return None
    curve = _parse_curve(obj["curve"], path + "/curve", out)
    scale = _parse_scale(obj["scale"], path + "/scale", out)
    try:
        parameter = ParameterRef.parse(str(obj["parameter"]))
    except ValueError as e:
        out.error(path + "/parameter", str(e))
        parameter = None
    mode = None
    try:
        mode = BlendMode(obj["blend"])
    except ValueError:
        allowed = ", ".join(m.value for m in BlendMode)
        out.error(path + "/blend", f"unknown blend mode '{obj['blend']}' (allowed: {allowed})")
    multiplier = obj.get("multiplier", 1.0)
    if not isinstance(multiplier, (int, float)):
        out.error(path + "/multiplier", "multiplier must be a number")
        multiplier = 1.0
    if curve is None or scale is None or parameter is None or mode is None:
        return None
    try:
        return EncodingLayer(
            curve=curve, scale=scale, parameter=parameter,
            mode=mode, multiplier=float(multiplier),
        )
    except ValueError as e:
        out.error(path, str(e))
        return None


def _parse_render(obj: Any, path: str, out: _Collector) -> RenderConfig:
    config = RenderConfig()
    if obj is None:
        return config
    if not isinstance(obj, dict):
        out.error(path, "render must be an object")
        return config
    for k in set(obj) - _RENDER_KEYS:
        out.warning(path + f"/{k}", f"unknown render field '{k}'")
    for key in ("width", "height", "margin", "supersample", "n_frames", "fps"):
        if key in obj:
            if not isinstance(obj[key], int):
                out.error(path + f"/{key}", f"'{key}' must be an integer")
            else:
                setattr(config, key, obj[key])
    if "line_width" in obj:
        if not isinstance(obj["line_width"], (int, float)):
            out.error(path + "/line_width", "'line_width' must be a number")
        else:
            config.line_width = float(obj["line_width"])
    if "draw_axes" in obj:
        if not isinstance(obj["draw_axes"], bool):
            out.error(path + "/draw_axes", "'draw_axes' must be a boolean")
        else:
            config.draw_axes = obj["draw_axes"]
    if "background" in obj:
        bg = obj["background"]
        if (
            not isinstance(bg, list)
            or len(bg) != 4
            or not all(isinstance(x, (int, float)) for x in bg)
        ):
            out.error(path + "/background", "background must be [r, g, b, a]")
        else:
            try:
                config.background = Color(*map(float, bg))
            except ValueError as e:
                out.error(path + "/background", str(e))
    if "y_domain" in obj and obj["y_domain"] is not None:
        yd = obj["y_domain"]
        if (
            not isinstance(yd, list)
            or len(yd) != 2
            or not all(isinstance(x, (int, float)) for x in yd)
        ):
            out.error(path + "/y_domain", "y_domain must be [lo, hi]")
        else:
            config.y_domain = (float(yd[0]), float(yd[1]))
    try:
        config.validate()
    except ValueError as e:
        out.error(path, str(e))
    return config


def parse_query(text: str) -> tuple[Optional[QueryDocument], list[Diagnostic]]:
    """Parse and structurally validate a query document.

    Returns (document, diagnostics); the document is None when any error
    diagnostic was produced.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        out = _Collector()
        out.error("", f"invalid JSON: {e.msg} (line {e.lineno})")
        return None, out.diags
    return parse_query_obj(obj)


def parse_query_obj(obj: Any) -> tuple[Optional[QueryDocument], list[Diagnostic]]:
    """Like parse_query, for an already-decoded JSON value."""
    out = _Collector()
    if not isinstance(obj, dict):
        out.error("", "document must be a JSON object")
        return None, out.diags

    for k in set(obj) - _TOP_KEYS:
        out.warning(f"/{k}", f"unknown field '{k}'")

    layers_obj = obj.get("layers")
    layers: list[EncodingLayer] = []
    if not isinstance(layers_obj, list) or not layers_obj:
        out.error("/layers", "document needs a nonempty 'layers' list")
    else:
        for i, layer_obj in enumerate(layers_obj):
            layer = _parse_layer(layer_obj, f"/layers/{i}", out)
            if layer is not None:
                layers.append(layer)
        if layers and layers[0].mode in (BlendMode.MULTIPLY, BlendMode.MASK):
            out.warning(
                "/layers/0/blend",
                f"first layer blend '{layers[0].mode.value}' folds against the "
                "zero color; output will be all-zero or zero-alpha",
            )

    render = _parse_render(obj.get("render"), "/render", out)
    meta = obj.get("meta", {})
    if not isinstance(meta, dict):
        out.error("/meta", "meta must be an object")
        meta = {}

    if out.failed:
        return None, out.diags
    doc = QueryDocument(
        dataset_ref=str(obj.get("dataset", "")),
        query=KineticQuery(tuple(layers)),
        render=render,
        meta=meta,
    )
    return doc, out.diags


def validate_against(doc: QueryDocument, registry) -> list[Diagnostic]:
    """Check every parameter reference against a dataset's registry."""
    out = _Collector()
    for i, layer in enumerate(doc.query.layers):
        ref = layer.parameter
        path = f"/layers/{i}/parameter"
        if ref.kind in ("district", "action") and not (
            1 <= ref.district_id <= registry.district_count
        ):
            out.error(
                path,
                f"district {ref.district_id} out of range "
                f"(dataset has districts 1..{registry.district_count})",
            )
        elif ref.kind == "action" and ref.name not in registry.action_vocabulary:
            vocab = ", ".join(registry.action_vocabulary) or "(empty)"
            out.error(path, f"action '{ref.name}' not in vocabulary ({vocab})")
        elif not registry.resolvable(ref):
            out.error(path, f"unresolvable parameter '{ref}'")
    return out.diags


def _curve_json(curve: AnimationCurve) -> dict:
    return {"keyframes": [[t, v] for t, v in curve.keyframes]}


def _scale_json(scale: ColorScale) -> dict:
    return {"stops": [[pos, list(color.as_tuple())] for pos, color in scale.stops]}


def serialize(doc: QueryDocument) -> str:
    """Canonical JSON: sorted keys, defaults explicit, curves as keyframes."""
    obj = {
        "dataset": doc.dataset_ref,
        "meta": doc.meta,
        "render": {
            "width": doc.render.width,
            "height": doc.render.height,
            "margin": doc.render.margin,
            "line_width": doc.render.line_width,
            "background": list(doc.render.background.as_tuple()),
            "supersample": doc.render.supersample,
            "n_frames": doc.render.n_frames,
            "fps": doc.render.fps,
            "y_domain": list(doc.render.y_domain) if doc.render.y_domain else None,
            "draw_axes": doc.render.draw_axes,
        },
        "layers": [
            {
                "curve": _curve_json(layer.curve),
                "scale": _scale_json(layer.scale),
                "parameter": str(layer.parameter),
                "blend": layer.mode.value,
                "multiplier": layer.multiplier,
            }
            for layer in doc.query.layers
        ],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"

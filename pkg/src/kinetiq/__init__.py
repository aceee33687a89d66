"""kinetiq: animated encoding layers for game-telemetry line charts."""

from .data import (
    Dataset,
    DistrictState,
    ParameterRef,
    ParameterRegistry,
    Playthrough,
    SimConfig,
    TurnPoint,
    TurnRecord,
    build_registry,
    generate_synthetic,
    ingest_xapi,
    parameter_value,
    parse_dataset,
    serialize_dataset,
)
from .kinetics import (
    AnimationCurve,
    Color,
    ColorScale,
    eval_curve,
    preset_curve,
    sample_scale,
)
from .pipeline import (
    BlendMode,
    ColorBuffer,
    EncodingLayer,
    FrameSet,
    KineticQuery,
    LayerTrace,
    blend,
    evaluate_frame,
    evaluate_layer,
    evaluate_loop,
    evaluate_point,
)
from .queryspec import Diagnostic, QueryDocument, parse_query, serialize, validate_against
from .render import ChartGeometry, Image, RenderConfig, layout, rasterize_frame

__version__ = "0.1.0"

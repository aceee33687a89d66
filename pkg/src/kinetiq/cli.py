"""Batch front end: render animations, inspect parameters, generate
synthetic fixtures, validate query documents, and launch the service.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import encode
from .data import (
    DatasetError,
    SimConfig,
    build_registry,
    generate_synthetic,
    parse_dataset,
    serialize_dataset,
)
from .pipeline import evaluate_frame
from .queryspec import parse_query, serialize, validate_against
from .render import FrameRasterizer, layout, render_animation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int) -> "CliError":
    return CliError(message, code)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise _fail(f"cannot read {path}: {e.strerror}", EXIT_IO) from None


def _load_dataset(path: str):
    text = _read_text(path)
    try:
        return parse_dataset(text)
    except DatasetError as e:
        raise _fail(f"{path}: {e}", EXIT_VALIDATION) from None


def _load_document(spec_path: str, registry):
    doc, diags = parse_query(_read_text(spec_path))
    for d in diags:
        click.echo(f"{spec_path}:{d}", err=True)
    if doc is None:
        raise _fail(f"{spec_path}: invalid query document", EXIT_VALIDATION)
    val = validate_against(doc, registry)
    for d in val:
        click.echo(f"{spec_path}:{d}", err=True)
    if any(d.severity == "error" for d in val):
        raise _fail(f"{spec_path}: query does not match dataset", EXIT_VALIDATION)
    return doc


@click.group()
def cli():
    """Kinetic-query renderer for game-telemetry line charts."""


@cli.command("render")
@click.argument("spec_path", type=click.Path())
@click.argument("data_path", type=click.Path())
@click.argument("out_path", type=click.Path())
@click.option("--frames", type=int, default=None, help="Override frame count.")
@click.option("--fps", type=int, default=None, help="Override frames per second.")
@click.option(
    "--format", "fmt",
    type=click.Choice(["apng", "gif", "png_sequence"]),
    default="apng", show_default=True,
)
def cmd_render(spec_path, data_path, out_path, frames, fps, fmt):
    """Render the full animation loop for SPEC_PATH over DATA_PATH."""
    dataset = _load_dataset(data_path)
    registry = build_registry(dataset)
    doc = _load_document(spec_path, registry)
    if frames is not None:
        doc.render.n_frames = frames
    if fps is not None:
        doc.render.fps = fps
    try:
        doc.render.validate()
    except ValueError as e:
        raise _fail(str(e), EXIT_VALIDATION) from None
    images = render_animation(dataset, registry, doc.query, doc.render)
    try:
        encode.encode_animation(images, fmt, doc.render.fps, Path(out_path))
    except OSError as e:
        raise _fail(f"cannot write {out_path}: {e.strerror}", EXIT_IO) from None
    click.echo(f"wrote {out_path} ({len(images)} frames, {fmt})")


@cli.command("frame")
@click.argument("spec_path", type=click.Path())
@click.argument("data_path", type=click.Path())
@click.argument("t", type=float)
@click.argument("out_path", type=click.Path())
def cmd_frame(spec_path, data_path, t, out_path):
    """Render a single still PNG at loop phase T."""
    dataset = _load_dataset(data_path)
    registry = build_registry(dataset)
    doc = _load_document(spec_path, registry)
    buffer = evaluate_frame(doc.query, t, dataset, registry)
    image = FrameRasterizer(layout(dataset, doc.render), doc.render).render(buffer)
    try:
        Path(out_path).write_bytes(encode.encode_png(image))
    except OSError as e:
        raise _fail(f"cannot write {out_path}: {e.strerror}", EXIT_IO) from None
    click.echo(f"wrote {out_path} (t={t % 1.0})")


@cli.command("params")
@click.argument("data_path", type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of text.")
def cmd_params(data_path, as_json):
    """List every selectable parameter of DATA_PATH with its domain."""
    dataset = _load_dataset(data_path)
    registry = build_registry(dataset)
    mapping = registry.as_json()
    if as_json:
        click.echo(json.dumps(mapping, indent=2))
        return
    width = max(len(k) for k in mapping)
    for ref, (lo, hi) in mapping.items():
        if ref == "baseline":
            click.echo(f"{ref:<{width}}  constant 1")
        else:
            click.echo(f"{ref:<{width}}  [{lo:g}, {hi:g}]")


@cli.command("validate")
@click.argument("spec_path", type=click.Path())
@click.argument("data_path", type=click.Path())
def cmd_validate(spec_path, data_path):
    """Check SPEC_PATH against DATA_PATH without rendering."""
    dataset = _load_dataset(data_path)
    registry = build_registry(dataset)
    _load_document(spec_path, registry)
    click.echo("ok")


@cli.command("simgen")
@click.argument("out_path", type=click.Path())
@click.option("--seed", type=int, required=True, help="RNG seed (required).")
@click.option("--players", type=int, default=100, show_default=True)
@click.option("--turns", type=int, default=20, show_default=True)
@click.option("--districts", type=int, default=4, show_default=True)
@click.option(
    "--mix", default="deliberate=0.6,hurried=0.25,scattered=0.15",
    show_default=True, help="strategy=weight pairs, comma separated.",
)
def cmd_simgen(out_path, seed, players, turns, districts, mix):
    """Write a seeded synthetic dataset as JSONL."""
    try:
        strategy_mix = {}
        for part in mix.split(","):
            name, _, weight = part.strip().partition("=")
            strategy_mix[name] = float(weight)
        config = SimConfig(
            seed=seed, n_players=players, n_turns=turns,
            n_districts=districts, strategy_mix=strategy_mix,
        )
        config.validate()
    except ValueError as e:
        raise _fail(f"bad simgen configuration: {e}", EXIT_VALIDATION) from None
    dataset = generate_synthetic(config)
    try:
        Path(out_path).write_text(serialize_dataset(dataset))
    except OSError as e:
        raise _fail(f"cannot write {out_path}: {e.strerror}", EXIT_IO) from None
    click.echo(f"wrote {out_path} ({players} playthroughs)")


@cli.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(), default=None,
              help="Persist uploaded datasets here (and preload *.jsonl).")
def cmd_serve(port, host, data_dir):
    """Run the HTTP service for the workbench UI."""
    import socket

    import uvicorn

    from .service import create_app

    app = create_app(Path(data_dir) if data_dir else None)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{bound_port}")
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except CliError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(e.code)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_VALIDATION)
    except click.exceptions.Abort:
        sys.exit(EXIT_INTERNAL)
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_IO)
    except Exception as e:  # noqa: BLE001
        click.echo(f"internal error: {e}", err=True)
        sys.exit(EXIT_INTERNAL)


if __name__ == "__main__":
    main()

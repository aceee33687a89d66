"""Animation encoders: APNG (lossless, infinite loop), GIF (best-effort
256-color), and numbered PNG sequences.

The PNG/APNG writer is self-contained (struct + zlib, filter type 0) so
frame delays can be written exactly as 1/fps and output bytes are fully
deterministic. GIF goes through Pillow with adaptive quantization.
"""

from __future__ import annotations

import io
import struct
import zlib
from pathlib import Path
from typing import Optional

import numpy as np

from .render import Image

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def _ihdr(width: int, height: int) -> bytes:
    # 8-bit RGBA, no interlace
    return _chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 6, 0, 0, 0))


def _scanlines(image: Image) -> bytes:
    rows = image.pixels.reshape(image.height, image.width * 4)
    filtered = np.zeros((image.height, image.width * 4 + 1), dtype=np.uint8)
    filtered[:, 1:] = rows
    return filtered.tobytes()


def encode_png(image: Image) -> bytes:
    """A single still PNG."""
    data = zlib.compress(_scanlines(image), 6)
    return (
        PNG_SIGNATURE
        + _ihdr(image.width, image.height)
        + _chunk(b"IDAT", data)
        + _chunk(b"IEND", b"")
    )


def encode_apng(frames: list[Image], fps: int) -> bytes:
    """Animated PNG with per-frame delay exactly 1/fps and infinite loop."""
    if not frames:
        raise ValueError("need at least one frame")
    w, h = frames[0].width, frames[0].height
    for f in frames:
        if (f.width, f.height) != (w, h):
            raise ValueError("all frames must share the same dimensions")

    out = bytearray(PNG_SIGNATURE + _ihdr(w, h))
    out += _chunk(b"acTL", struct.pack(">II", len(frames), 0))  # 0 = loop forever
    seq = 0
    for i, frame in enumerate(frames):
        fctl = struct.pack(
            ">IIIIIHHBB",
            seq, w, h, 0, 0,
            1, fps,  # delay_num / delay_den
            0,  # dispose: none
            0,  # blend: source
        )
        out += _chunk(b"fcTL", fctl)
        seq += 1
        data = zlib.compress(_scanlines(frame), 6)
        if i == 0:
            out += _chunk(b"IDAT", data)
        else:
            out += _chunk(b"fdAT", struct.pack(">I", seq) + data)
            seq += 1
    out += _chunk(b"IEND", b"")
    return bytes(out)


def encode_gif(frames: list[Image], fps: int) -> bytes:
    from PIL import Image as PILImage

    pil_frames = [
        PILImage.fromarray(f.pixels, mode="RGBA").convert("RGB") for f in frames
    ]
    buf = io.BytesIO()
    pil_frames[0].save(
        buf,
        format="GIF",
        save_all=True,
        append_images=pil_frames[1:],
        duration=int(round(1000.0 / fps)),
        loop=0,
        optimize=False,
    )
    return buf.getvalue()


def encode_animation(
    frames: list[Image],
    fmt: str,
    fps: int,
    out_path: Optional[Path] = None,
) -> Optional[bytes]:
    """Encode frames as 'apng', 'gif', or 'png_sequence'.

    apng/gif return the bytes (also written to out_path when given);
    png_sequence writes frame_0000.png... into the out_path directory.
    """
    if fmt == "png_sequence":
        if out_path is None:
            raise ValueError("png_sequence needs an output directory")
        out_path = Path(out_path)
        out_path.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(frames):
            (out_path / f"frame_{i:04d}.png").write_bytes(encode_png(frame))
        return None
    if fmt == "apng":
        data = encode_apng(frames, fps)
    elif fmt == "gif":
        data = encode_gif(frames, fps)
    else:
        raise ValueError(f"unknown format '{fmt}' (apng, gif, png_sequence)")
    if out_path is not None:
        Path(out_path).write_bytes(data)
    return data

import io
import struct
import zlib

import numpy as np
import pytest
from PIL import Image as PILImage

from kinetiq.encode import encode_animation, encode_apng, encode_gif, encode_png
from kinetiq.render import Image


def random_image(rng, w=48, h=32):
    return Image(w, h, rng.integers(0, 256, size=(h, w, 4), dtype=np.uint8))


def chunks(data):
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    pos = 8
    out = []
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        payload = data[pos + 8:pos + 8 + length]
        crc = struct.unpack(">I", data[pos + 8 + length:pos + 12 + length])[0]
        assert crc == zlib.crc32(tag + payload) & 0xFFFFFFFF
        out.append((tag, payload))
        pos += 12 + length
    return out


class TestPng:
    def test_roundtrip_pixels(self):
        rng = np.random.default_rng(0)
        img = random_image(rng)
        decoded = np.array(PILImage.open(io.BytesIO(encode_png(img))).convert("RGBA"))
        assert np.array_equal(decoded, img.pixels)


class TestApng:
    def test_roundtrip_60_frames(self):
        rng = np.random.default_rng(1)
        frame = random_image(rng)
        data = encode_apng([frame] * 60, fps=30)
        im = PILImage.open(io.BytesIO(data))
        assert im.n_frames == 60
        for k in range(60):
            im.seek(k)
            assert np.array_equal(np.array(im.convert("RGBA")), frame.pixels)

    def test_distinct_frames_roundtrip(self):
        rng = np.random.default_rng(2)
        frames = [random_image(rng) for _ in range(5)]
        im = PILImage.open(io.BytesIO(encode_apng(frames, fps=10)))
        for k, f in enumerate(frames):
            im.seek(k)
            assert np.array_equal(np.array(im.convert("RGBA")), f.pixels)

    def test_delay_is_exactly_one_over_fps(self):
        rng = np.random.default_rng(3)
        data = encode_apng([random_image(rng)] * 2, fps=30)
        fctls = [p for tag, p in chunks(data) if tag == b"fcTL"]
        assert len(fctls) == 2
        for payload in fctls:
            delay_num, delay_den = struct.unpack(">HH", payload[20:24])
            assert (delay_num, delay_den) == (1, 30)

    def test_infinite_loop_flag(self):
        rng = np.random.default_rng(4)
        data = encode_apng([random_image(rng)], fps=10)
        (actl,) = [p for tag, p in chunks(data) if tag == b"acTL"]
        n_frames, n_plays = struct.unpack(">II", actl)
        assert n_frames == 1
        assert n_plays == 0  # infinite

    def test_mixed_sizes_fatal(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError, match="same dimensions"):
            encode_apng([random_image(rng, 48, 32), random_image(rng, 32, 48)], fps=10)

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        frames = [random_image(rng) for _ in range(3)]
        assert encode_apng(frames, 10) == encode_apng(frames, 10)


class TestGif:
    def test_decodes_with_loop(self):
        rng = np.random.default_rng(7)
        frames = [random_image(rng) for _ in range(4)]
        data = encode_gif(frames, fps=10)
        im = PILImage.open(io.BytesIO(data))
        assert im.format == "GIF"
        assert im.n_frames == 4
        assert im.info.get("loop") == 0


class TestEncodeAnimation:
    def test_png_sequence_naming(self, tmp_path):
        rng = np.random.default_rng(8)
        frames = [random_image(rng) for _ in range(3)]
        encode_animation(frames, "png_sequence", fps=10, out_path=tmp_path / "seq")
        names = sorted(p.name for p in (tmp_path / "seq").iterdir())
        assert names == ["frame_0000.png", "frame_0001.png", "frame_0002.png"]

    def test_apng_written_to_file(self, tmp_path):
        rng = np.random.default_rng(9)
        out = tmp_path / "anim.png"
        data = encode_animation([random_image(rng)], "apng", fps=10, out_path=out)
        assert out.read_bytes() == data

    def test_unknown_format(self):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError, match="unknown format"):
            encode_animation([random_image(rng)], "webm", fps=10)

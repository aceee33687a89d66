"""End-to-end acceptance checks for the kinetic-query engine.

Each test covers one shipping criterion and prints a single PASS line
with the measured value and its pinned tolerance. Run with `pytest -s
tests/test_acceptance.py` to see the lines; any failure is a red build.
"""

import io
import json
import random
import subprocess
import sys
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image as PILImage

import kinetiq.service as service
from kinetiq.data import (
    SimConfig,
    assign_strategies,
    build_registry,
    generate_synthetic,
    serialize_dataset,
)
from kinetiq.encode import encode_apng
from kinetiq.kinetics import Color, ColorScale, preset_curve
from kinetiq.pipeline import (
    BlendMode,
    KineticQuery,
    _blend_arrays,
    blend,
    evaluate_frame,
    evaluate_layer,
    evaluate_loop,
)
from kinetiq.render import FrameRasterizer, RenderConfig, layout, render_frames

from conftest import make_layer
from test_pipeline import oracle_point, random_query


def flat_scale(color):
    return ColorScale(((0.0, color),))


@pytest.fixture(scope="module")
def perf_dataset():
    config = SimConfig(
        seed=11, n_players=400, n_turns=25, n_districts=10,
        strategy_mix={"deliberate": 0.6, "hurried": 0.25, "scattered": 0.15},
    )
    return generate_synthetic(config)


@pytest.fixture(scope="module")
def perf_registry(perf_dataset):
    return build_registry(perf_dataset)


def eight_layer_query(registry):
    rng = random.Random(2024)
    layers = []
    while len(layers) < 8:
        q = random_query(rng, registry, max_layers=1)
        layers.append(q.layers[0])
    return KineticQuery(tuple(layers))


class TestAcceptance:
    def test_1_equation_fidelity(self, synth_dataset, synth_registry):
        """c == clamp(A(t) * p * m, 0, 1) on 10,000 randomized samples."""
        rng = random.Random(101)
        points = synth_dataset.points()
        start = time.perf_counter()
        worst = 0.0
        for _ in range(10_000):
            layer = random_query(rng, synth_registry, max_layers=1).layers[0]
            t = rng.uniform(-2.0, 2.0)
            pt = rng.choice(points)
            _, trace = evaluate_layer(
                Color(0, 0, 0, 0), layer, t, pt, synth_dataset, synth_registry
            )
            expected = min(max(trace.a_t * trace.p * layer.multiplier, 0.0), 1.0)
            worst = max(worst, abs(trace.c - expected))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-12
        assert elapsed < 5.0
        print(f"\nPASS 1 equation fidelity: max|dc|={worst:.2e} "
              f"(tol 1e-12), {elapsed:.2f}s (budget 5s)")

    def test_2_oracle_equivalence(self):
        """1,000 random queries vs an independent fold oracle, 1e-12/channel."""
        config = SimConfig(seed=7, n_players=10, n_turns=10, n_districts=4,
                           strategy_mix={"deliberate": 0.5, "hurried": 0.3,
                                         "scattered": 0.2})
        dataset = generate_synthetic(config)
        registry = build_registry(dataset)
        points = dataset.points()
        rng = random.Random(202)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(1_000):
            q = random_query(rng, registry, max_layers=6)
            t = rng.uniform(0.0, 1.0)
            pt = rng.choice(points)
            from kinetiq.pipeline import evaluate_point
            engine = evaluate_point(q, t, pt, dataset, registry)
            expect = oracle_point(q, t, pt, dataset, registry)
            for a, b in zip(engine.as_tuple(), expect):
                worst = max(worst, abs(a - b))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-12
        assert elapsed < 30.0
        print(f"\nPASS 2 oracle equivalence: max|dch|={worst:.2e} "
              f"(tol 1e-12), {elapsed:.2f}s (budget 30s)")

    def test_3_blend_laws(self):
        """Add saturating-commutative, Multiply commutative with identity,
        Mask passthrough rgb + min alpha; grid step 0.25 plus 10,000 random
        pairs."""
        start = time.perf_counter()
        levels = np.linspace(0.0, 1.0, 5)
        grid = np.stack(np.meshgrid(*[levels] * 4, indexing="ij"), -1).reshape(-1, 4)
        n = len(grid)  # 625 colors -> 625^2 ordered pairs via broadcasting
        a = np.repeat(grid, n, axis=0)
        b = np.tile(grid, (n, 1))

        add_ab = _blend_arrays(BlendMode.ADD, a, b)
        assert np.array_equal(add_ab, _blend_arrays(BlendMode.ADD, b, a))
        assert np.array_equal(add_ab, np.minimum(a + b, 1.0))

        mul_ab = _blend_arrays(BlendMode.MULTIPLY, a, b)
        assert np.array_equal(mul_ab, _blend_arrays(BlendMode.MULTIPLY, b, a))
        ones = np.ones_like(grid)
        assert np.array_equal(_blend_arrays(BlendMode.MULTIPLY, grid, ones), grid)

        mask_ab = _blend_arrays(BlendMode.MASK, a, b)
        assert np.array_equal(mask_ab[:, :3], a[:, :3])
        assert np.array_equal(mask_ab[:, 3], np.minimum(a[:, 3], b[:, 3]))

        rng = random.Random(303)
        for _ in range(10_000):
            p = Color(*(rng.random() for _ in range(4)))
            c = Color(*(rng.random() for _ in range(4)))
            assert blend(BlendMode.ADD, p, c) == blend(BlendMode.ADD, c, p)
            assert blend(BlendMode.MULTIPLY, p, c) == blend(BlendMode.MULTIPLY, c, p)
            m = blend(BlendMode.MASK, p, c)
            assert (m.r, m.g, m.b) == (p.r, p.g, p.b)
            assert m.a == min(p.a, c.a)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0
        print(f"\nPASS 3 blend laws: {n * n} grid pairs + 10000 random pairs "
              f"exact, {elapsed:.2f}s (budget 10s)")

    def test_4_loop_seam(self, synth_dataset, synth_registry):
        """t=0 and t=1 frames bitwise equal; APNG frame 0 == fresh t=0 raster."""
        rng = random.Random(404)
        for _ in range(100):
            q = random_query(rng, synth_registry)
            f0 = evaluate_frame(q, 0.0, synth_dataset, synth_registry)
            f1 = evaluate_frame(q, 1.0, synth_dataset, synth_registry)
            assert f0.colors.tobytes() == f1.colors.tobytes()

        q = random_query(random.Random(405), synth_registry)
        cfg = RenderConfig(width=200, height=120, supersample=1, n_frames=6, fps=12)
        frame_set = evaluate_loop(q, synth_dataset, synth_registry, cfg.n_frames)
        images = render_frames(synth_dataset, frame_set, cfg)
        apng = encode_apng(images, cfg.fps)
        decoded = PILImage.open(io.BytesIO(apng))
        decoded.seek(0)
        first = np.array(decoded.convert("RGBA"))
        fresh = FrameRasterizer(layout(synth_dataset, cfg), cfg).render(
            evaluate_frame(q, 0.0, synth_dataset, synth_registry)
        )
        assert first.tobytes() == fresh.pixels.tobytes()
        print("\nPASS 4 loop seam: 100 queries bitwise at t=0 vs t=1; "
              "APNG frame 0 == fresh t=0 raster byte-for-byte")

    def test_5_duration_cluster_separation(self):
        """Hurried players encode visibly fainter than deliberate players.

        Gap between group mean alphas frozen from an oracle run of this
        exact configuration; asserted at +-0.02.
        """
        start = time.perf_counter()
        config = SimConfig(
            seed=42, n_players=100, n_turns=20, n_districts=4,
            strategy_mix={"deliberate": 0.7, "hurried": 0.3},
        )
        dataset = generate_synthetic(config)
        registry = build_registry(dataset)
        strategies = assign_strategies(config)
        q = KineticQuery((make_layer("duration"),))
        buf = evaluate_frame(q, 0.0, dataset, registry)
        groups = {"hurried": [], "deliberate": []}
        for pt, alpha in zip(buf.points, buf.colors[:, 3]):
            groups[strategies[pt.playthrough]].append(alpha)
        gap = float(np.mean(groups["deliberate"]) - np.mean(groups["hurried"]))
        elapsed = time.perf_counter() - start
        assert gap == pytest.approx(0.490365, abs=0.02)
        assert gap > 0.0
        assert elapsed < 5.0
        print(f"\nPASS 5 duration clusters: mean-alpha gap {gap:.6f} "
              f"(frozen 0.490365 +-0.02), {elapsed:.2f}s (budget 5s)")

    def test_6_action_masking(self, synth_dataset, synth_registry):
        """Baseline + Mask on an action flag: alpha exactly 0 or exactly
        the baseline alpha, depending on the flag."""
        base_alpha = 0.85
        action = "fundraiser"
        base = make_layer("baseline", scale=flat_scale(Color(0.9, 0.4, 0.1, base_alpha)))
        mask = make_layer(
            f"action.{action}.district.4",
            mode=BlendMode.MASK,
            scale=ColorScale(((0.0, Color(0, 0, 0, 0)), (1.0, Color(0, 0, 0, 1)))),
        )
        q = KineticQuery((base, mask))
        buf = evaluate_frame(q, 0.0, synth_dataset, synth_registry)
        flagged = unflagged = 0
        for pt, alpha in zip(buf.points, buf.colors[:, 3]):
            d = synth_dataset.turn(pt).district(4)
            flag = d.actions.get(action, 0)
            if flag:
                assert alpha == base_alpha
                flagged += 1
            else:
                assert alpha == 0.0
                unflagged += 1
        assert flagged and unflagged
        print(f"\nPASS 6 action masking: {flagged} flagged points alpha "
              f"exactly {base_alpha}, {unflagged} unflagged exactly 0")

    def test_7_additive_pulse(self, synth_dataset, synth_registry):
        """At the pulse peak, action points sit above non-action points by
        exactly the action layer's sampled alpha (saturation-aware)."""
        action = "rally"
        for base_alpha, pulse_alpha in ((0.25, 0.5), (0.75, 0.5)):
            base = make_layer(
                "baseline", scale=flat_scale(Color(0.2, 0.2, 0.8, base_alpha))
            )
            pulse = make_layer(
                f"action.{action}.district.2",
                curve=preset_curve("pulse", center=0.5, width=0.5),
                scale=ColorScale((
                    (0.0, Color(1, 1, 0, 0)), (1.0, Color(1, 1, 0, pulse_alpha)),
                )),
            )
            q = KineticQuery((base, pulse))
            buf = evaluate_frame(q, 0.5, synth_dataset, synth_registry)
            expected_gap = min(base_alpha + pulse_alpha, 1.0) - base_alpha
            flagged = unflagged = 0
            for pt, alpha in zip(buf.points, buf.colors[:, 3]):
                d = synth_dataset.turn(pt).district(2)
                if d.actions.get(action, 0):
                    assert alpha - base_alpha == expected_gap
                    flagged += 1
                else:
                    assert alpha == base_alpha
                    unflagged += 1
            assert flagged and unflagged
        print("\nPASS 7 additive pulse: peak-alpha gap exactly 0.5 unsaturated "
              "and exactly 0.25 under saturation")

    def test_8_performance(self, perf_dataset, perf_registry):
        """400 x 25 x 10 dataset, 8 layers, 60 frames: loop < 1 s, raster +
        APNG < 10 s, /api/evaluate < 1.5 s."""
        q = eight_layer_query(perf_registry)

        start = time.perf_counter()
        frame_set = evaluate_loop(q, perf_dataset, perf_registry, 60)
        t_eval = time.perf_counter() - start
        assert t_eval < 1.0

        cfg = RenderConfig(width=960, height=540, supersample=1,
                           n_frames=60, fps=30)
        start = time.perf_counter()
        images = render_frames(perf_dataset, frame_set, cfg)
        encode_apng(images, cfg.fps)
        t_render = time.perf_counter() - start
        assert t_render < 10.0

        client = TestClient(service.create_app())
        upload = client.post(
            "/api/datasets", content=serialize_dataset(perf_dataset).encode()
        )
        assert upload.status_code == 201
        from kinetiq.queryspec import serialize

        layers = json.loads(serialize(_doc_for(q)))["layers"]
        body = {
            "dataset_id": upload.json()["dataset_id"],
            "n_frames": 60,
            "query": {"layers": layers},
        }
        start = time.perf_counter()
        resp = client.post("/api/evaluate", json=body)
        t_api = time.perf_counter() - start
        assert resp.status_code == 200
        assert t_api < 1.5
        print(f"\nPASS 8 performance: eval {t_eval:.2f}s (<1s), "
              f"raster+encode {t_render:.2f}s (<10s), "
              f"/api/evaluate {t_api:.2f}s (<1.5s)")

    def test_9_determinism(self, tmp_path):
        """CLI render byte-identical across runs and equal to /api/render."""
        data_path = tmp_path / "d.jsonl"
        r = subprocess.run(
            [sys.executable, "-m", "kinetiq.cli", "simgen", str(data_path),
             "--seed", "5", "--players", "12", "--turns", "6"],
            capture_output=True, text=True,
        )
        assert r.returncode == 0, r.stderr
        spec = {
            "dataset": "d.jsonl",
            "layers": [
                {
                    "parameter": "duration",
                    "curve": {"preset": {"name": "pulse", "center": 0.5,
                                         "width": 0.6}},
                    "scale": {"stops": [[0, [0, 0, 0, 0]],
                                        [1, [0.9, 0.2, 0.1, 1]]]},
                    "blend": "add",
                }
            ],
            "render": {"width": 320, "height": 180, "supersample": 1,
                       "n_frames": 8, "fps": 16},
        }
        spec_path = tmp_path / "q.json"
        spec_path.write_text(json.dumps(spec))
        outputs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            r = subprocess.run(
                [sys.executable, "-m", "kinetiq.cli", "render",
                 str(spec_path), str(data_path), str(out)],
                capture_output=True, text=True,
            )
            assert r.returncode == 0, r.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

        client = TestClient(service.create_app())
        upload = client.post("/api/datasets", content=data_path.read_bytes())
        resp = client.post("/api/render", json={
            "dataset_id": upload.json()["dataset_id"],
            "query": {"layers": spec["layers"]},
            "render": spec["render"],
        })
        assert resp.status_code == 200
        assert resp.content == outputs[0]
        print("\nPASS 9 determinism: CLI renders byte-identical twice and "
              "equal to /api/render output")


def _doc_for(query):
    """Wrap an in-memory query so it can ride the canonical JSON form."""
    from kinetiq.queryspec import QueryDocument
    from kinetiq.render import RenderConfig

    return QueryDocument(
        dataset_ref="inline", query=query, render=RenderConfig(), meta={}
    )

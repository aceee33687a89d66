import json

import pytest

from kinetiq.data import SimConfig, build_registry, generate_synthetic, parse_dataset
from kinetiq.kinetics import Color, ColorScale, preset_curve
from kinetiq.pipeline import BlendMode, EncodingLayer


def district(i, **over):
    d = {
        "id": i,
        "population": 10000 + 100 * i,
        "favorability": 40.0 + i,
        "unregistered": 0.1,
        "undecided": 0.2,
        "for": 0.4,
        "against": 0.3,
        "actions": {"rally": 0, "fundraiser": 0},
    }
    d.update(over)
    return d


def turn(idx, votes, **over):
    t = {
        "turn": idx,
        "total_votes": votes,
        "budget": 100.0 + 50.0 * idx,
        "duration_s": 30.0 + idx,
        "districts": [district(i) for i in range(1, 5)],
    }
    t.update(over)
    return t


def playthrough_line(player="p1", level=1, turns=None):
    return json.dumps(
        {"player_id": player, "level": level, "turns": turns or [turn(i, 50 * i) for i in range(3)]}
    )


@pytest.fixture
def small_jsonl():
    """2 players x 3 turns x 4 districts, actions rally/fundraiser."""
    lines = [playthrough_line("p1"), playthrough_line("p2")]
    return "\n".join(lines) + "\n"


@pytest.fixture
def small_dataset(small_jsonl):
    return parse_dataset(small_jsonl)


@pytest.fixture
def small_registry(small_dataset):
    return build_registry(small_dataset)


@pytest.fixture(scope="session")
def synth_dataset():
    config = SimConfig(
        seed=42, n_players=20, n_turns=8, n_districts=4,
        strategy_mix={"deliberate": 0.7, "hurried": 0.3},
    )
    return generate_synthetic(config)


@pytest.fixture(scope="session")
def synth_registry(synth_dataset):
    return build_registry(synth_dataset)


def gray_scale(alpha_hi=1.0):
    return ColorScale(
        ((0.0, Color(0, 0, 0, 0)), (1.0, Color(1, 1, 1, alpha_hi)))
    )


def make_layer(parameter, mode=BlendMode.ADD, curve=None, scale=None, multiplier=1.0):
    from kinetiq.data import ParameterRef

    if isinstance(parameter, str):
        parameter = ParameterRef.parse(parameter)
    return EncodingLayer(
        curve=curve or preset_curve("flat", v=1.0),
        scale=scale or gray_scale(),
        parameter=parameter,
        mode=mode,
        multiplier=multiplier,
    )

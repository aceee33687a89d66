"""Game-telemetry data model: playthrough records, JSONL parsing, xAPI
ingestion, the parameter registry, and the seeded synthetic generator.

Datasets and registries are immutable after construction; treat every
instance as read-only.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional

FRACTION_FIELDS = ("unregistered", "undecided", "for_share", "against_share")
DISTRICT_FIELDS = ("population", "favorability") + FRACTION_FIELDS
GLOBAL_FIELDS = ("budget", "duration")

# JSONL key <-> field name (keys "for"/"against" are reserved words / unsuffixed)
_DISTRICT_KEY_TO_FIELD = {
    "population": "population",
    "favorability": "favorability",
    "unregistered": "unregistered",
    "undecided": "undecided",
    "for": "for_share",
    "against": "against_share",
}
_FIELD_TO_DISTRICT_KEY = {v: k for k, v in _DISTRICT_KEY_TO_FIELD.items()}


class DatasetError(ValueError):
    """Fatal problem in a dataset file or statement stream."""


class RegistryWarning(UserWarning):
    """Non-fatal registry construction issue (degenerate domain)."""


class MissingParameterWarning(UserWarning):
    """A parameter reference did not resolve at some point; treated as 0."""


class XapiWarning(UserWarning):
    """An xAPI statement was skipped during ingestion."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class DistrictState:
    district_id: int
    population: int
    favorability: float
    unregistered: float
    undecided: float
    for_share: float
    against_share: float
    actions: dict[str, int] = field(default_factory=dict)

    def validate(self, where: str = "") -> None:
        if self.district_id < 1:
            raise DatasetError(f"{where}district id must be >= 1, got {self.district_id}")
        if self.population < 0:
            raise DatasetError(f"{where}population must be >= 0")
        for name in FRACTION_FIELDS:
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                key = _FIELD_TO_DISTRICT_KEY[name]
                raise DatasetError(f"{where}field '{key}' out of [0,1]: {v}")
        for action, flag in self.actions.items():
            if flag not in (0, 1):
                raise DatasetError(f"{where}action '{action}' flag must be 0 or 1, got {flag}")


@dataclass
class TurnRecord:
    turn_index: int
    total_votes: int
    budget: float
    duration_s: float
    districts: list[DistrictState]

    def validate(self, where: str = "") -> None:
        if self.turn_index < 0:
            raise DatasetError(f"{where}turn index must be >= 0")
        if self.total_votes < 0:
            raise DatasetError(f"{where}total_votes must be >= 0")
        if self.budget < 0:
            raise DatasetError(f"{where}budget must be >= 0")
        if self.duration_s < 0:
            raise DatasetError(f"{where}duration_s must be >= 0")
        if not self.districts:
            raise DatasetError(f"{where}district list is empty")
        ids = [d.district_id for d in self.districts]
        if len(set(ids)) != len(ids):
            raise DatasetError(f"{where}duplicate district ids: {ids}")
        for d in self.districts:
            d.validate(f"{where}district {d.district_id}: ")

    def district(self, district_id: int) -> Optional[DistrictState]:
        for d in self.districts:
            if d.district_id == district_id:
                return d
        return None


@dataclass
class Playthrough:
    player_id: str
    level: int
    turns: list[TurnRecord]

    def validate(self, where: str = "") -> None:
        if self.level < 1:
            raise DatasetError(f"{where}level must be >= 1")
        if not self.turns:
            raise DatasetError(f"{where}playthrough has no turns")
        prev = -1
        for t in self.turns:
            t.validate(f"{where}turn {t.turn_index}: ")
            if t.turn_index <= prev:
                raise DatasetError(
                    f"{where}turn indices must be strictly increasing "
                    f"({prev} then {t.turn_index})"
                )
            prev = t.turn_index


@dataclass(frozen=True)
class TurnPoint:
    """One (playthrough, turn) pair -- the unit that receives a color."""

    playthrough: int
    turn_index: int


@dataclass
class Dataset:
    level: int
    playthroughs: list[Playthrough]
    action_vocabulary: tuple[str, ...]
    district_count: int

    def __post_init__(self):
        self._turn_maps: Optional[list[dict[int, TurnRecord]]] = None
        self._points: Optional[list[TurnPoint]] = None

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.level == other.level
            and self.playthroughs == other.playthroughs
            and self.action_vocabulary == other.action_vocabulary
            and self.district_count == other.district_count
        )

    def points(self) -> list[TurnPoint]:
        """All TurnPoints in canonical (playthrough, turn) order."""
        if self._points is None:
            self._points = [
                TurnPoint(pi, t.turn_index)
                for pi, p in enumerate(self.playthroughs)
                for t in p.turns
            ]
        return self._points

    def turn(self, point: TurnPoint) -> TurnRecord:
        if self._turn_maps is None:
            self._turn_maps = [
                {t.turn_index: t for t in p.turns} for p in self.playthroughs
            ]
        try:
            return self._turn_maps[point.playthrough][point.turn_index]
        except (IndexError, KeyError):
            raise KeyError(f"no turn record for {point}") from None


@dataclass(frozen=True)
class ParameterRef:
    """Reference to one data parameter.

    kind is one of 'baseline', 'global', 'district', 'action':
      global   -> name in GLOBAL_FIELDS
      district -> district_id + field in DISTRICT_FIELDS
      action   -> name (action) + district_id
    """

    kind: str
    name: str = ""
    district_id: int = 0
    field: str = ""

    def __str__(self) -> str:
        if self.kind == "baseline":
            return "baseline"
        if self.kind == "global":
            return self.name
        if self.kind == "district":
            return f"district.{self.district_id}.{self.field}"
        return f"action.{self.name}.district.{self.district_id}"

    @staticmethod
    def parse(text: str) -> "ParameterRef":
        if text == "baseline":
            return ParameterRef("baseline")
        if text in GLOBAL_FIELDS:
            return ParameterRef("global", name=text)
        parts = text.split(".")
        if len(parts) == 3 and parts[0] == "district":
            if parts[2] not in DISTRICT_FIELDS:
                raise ValueError(
                    f"unknown district field '{parts[2]}' "
                    f"(expected one of {', '.join(DISTRICT_FIELDS)})"
                )
            return ParameterRef("district", district_id=int(parts[1]), field=parts[2])
        if len(parts) == 4 and parts[0] == "action" and parts[2] == "district":
            return ParameterRef("action", name=parts[1], district_id=int(parts[3]))
        raise ValueError(f"cannot parse parameter reference '{text}'")


ParameterRef.BASELINE = ParameterRef("baseline")


@dataclass
class ParameterRegistry:
    """Normalization domains for every resolvable parameter of a dataset.

    Fraction fields and action flags are fixed to [0, 1]; budget, duration,
    population, and favorability get observed [min, max] domains unless
    overridden. Baseline is the constant 1.
    """

    district_count: int
    action_vocabulary: tuple[str, ...]
    domains: dict[str, tuple[float, float]]

    def domain(self, ref: ParameterRef) -> tuple[float, float]:
        if ref.kind == "baseline":
            return (1.0, 1.0)
        if ref.kind == "global":
            return self.domains[ref.name]
        if ref.kind == "district":
            if ref.field in FRACTION_FIELDS:
                return (0.0, 1.0)
            return self.domains[ref.field]
        return (0.0, 1.0)

    def refs(self) -> list[ParameterRef]:
        """Every resolvable ParameterRef, in stable listing order."""
        out = [ParameterRef.BASELINE]
        out += [ParameterRef("global", name=n) for n in GLOBAL_FIELDS]
        for d in range(1, self.district_count + 1):
            out += [
                ParameterRef("district", district_id=d, field=f)
                for f in DISTRICT_FIELDS
            ]
        for a in self.action_vocabulary:
            out += [
                ParameterRef("action", name=a, district_id=d)
                for d in range(1, self.district_count + 1)
            ]
        return out

    def as_json(self) -> dict[str, list[float]]:
        """Every ref string mapped to its [lo, hi] domain, in listing order."""
        return {str(ref): list(self.domain(ref)) for ref in self.refs()}

    def resolvable(self, ref: ParameterRef) -> bool:
        if ref.kind == "baseline":
            return True
        if ref.kind == "global":
            return ref.name in GLOBAL_FIELDS
        if ref.kind == "district":
            return (
                1 <= ref.district_id <= self.district_count
                and ref.field in DISTRICT_FIELDS
            )
        if ref.kind == "action":
            return (
                1 <= ref.district_id <= self.district_count
                and ref.name in self.action_vocabulary
            )
        return False


@dataclass
class SimConfig:
    seed: int
    n_players: int
    n_turns: int
    n_districts: int
    strategy_mix: dict[str, float] = field(
        default_factory=lambda: {"deliberate": 1.0}
    )

    def validate(self) -> None:
        if self.n_players < 1 or self.n_turns < 1 or self.n_districts < 1:
            raise ValueError("player/turn/district counts must be >= 1")
        unknown = set(self.strategy_mix) - {"deliberate", "hurried", "scattered"}
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        if any(w < 0 for w in self.strategy_mix.values()):
            raise ValueError("strategy weights must be nonnegative")
        if abs(sum(self.strategy_mix.values()) - 1.0) > 1e-9:
            raise ValueError("strategy weights must sum to 1")


# ---------------------------------------------------------------------------
# JSONL parse / serialize
# ---------------------------------------------------------------------------


def _district_from_json(obj: dict, line_no: int) -> DistrictState:
    try:
        return DistrictState(
            district_id=int(obj["id"]),
            population=int(obj["population"]),
            favorability=float(obj["favorability"]),
            unregistered=float(obj["unregistered"]),
            undecided=float(obj["undecided"]),
            for_share=float(obj["for"]),
            against_share=float(obj["against"]),
            actions={str(k): int(v) for k, v in obj.get("actions", {}).items()},
        )
    except KeyError as e:
        raise DatasetError(f"line {line_no}: district missing key {e}") from None


def _turn_from_json(obj: dict, line_no: int) -> TurnRecord:
    try:
        return TurnRecord(
            turn_index=int(obj["turn"]),
            total_votes=int(obj["total_votes"]),
            budget=float(obj["budget"]),
            duration_s=float(obj["duration_s"]),
            districts=[_district_from_json(d, line_no) for d in obj["districts"]],
        )
    except KeyError as e:
        raise DatasetError(f"line {line_no}: turn missing key {e}") from None


def parse_dataset(stream: str | Iterable[str]) -> Dataset:
    """Parse JSON Lines (one playthrough per line) into a validated Dataset."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = list(stream)

    playthroughs: list[Playthrough] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetError(f"line {line_no}: malformed JSON ({e.msg})") from None
        try:
            p = Playthrough(
                player_id=str(obj["player_id"]),
                level=int(obj["level"]),
                turns=[_turn_from_json(t, line_no) for t in obj["turns"]],
            )
        except KeyError as e:
            raise DatasetError(f"line {line_no}: playthrough missing key {e}") from None
        try:
            p.validate()
        except DatasetError as e:
            raise DatasetError(f"line {line_no}: {e}") from None
        playthroughs.append(p)

    if not playthroughs:
        raise DatasetError("no playthroughs in input")
    return _assemble(playthroughs)


def _assemble(playthroughs: list[Playthrough]) -> Dataset:
    """Cross-playthrough consistency checks shared by all ingestion paths."""
    levels = {p.level for p in playthroughs}
    if len(levels) > 1:
        raise DatasetError(f"mixed levels in one dataset: {sorted(levels)}")

    first_ids = sorted(
        d.district_id for d in playthroughs[0].turns[0].districts
    )
    expected = list(range(1, len(first_ids) + 1))
    if first_ids != expected:
        raise DatasetError(
            f"district ids must be contiguous from 1, got {first_ids}"
        )
    vocab: set[str] = set()
    for p in playthroughs:
        for t in p.turns:
            ids = sorted(d.district_id for d in t.districts)
            if ids != first_ids:
                raise DatasetError(
                    f"player {p.player_id} turn {t.turn_index}: inconsistent "
                    f"district ids {ids} (expected {first_ids})"
                )
            for d in t.districts:
                vocab.update(d.actions)

    return Dataset(
        level=playthroughs[0].level,
        playthroughs=playthroughs,
        action_vocabulary=tuple(sorted(vocab)),
        district_count=len(first_ids),
    )


def serialize_dataset(dataset: Dataset) -> str:
    """Serialize back to the JSONL form accepted by parse_dataset."""
    lines = []
    for p in dataset.playthroughs:
        obj = {
            "player_id": p.player_id,
            "level": p.level,
            "turns": [
                {
                    "turn": t.turn_index,
                    "total_votes": t.total_votes,
                    "budget": t.budget,
                    "duration_s": t.duration_s,
                    "districts": [
                        {
                            "id": d.district_id,
                            "population": d.population,
                            "favorability": d.favorability,
                            "unregistered": d.unregistered,
                            "undecided": d.undecided,
                            "for": d.for_share,
                            "against": d.against_share,
                            "actions": d.actions,
                        }
                        for d in t.districts
                    ],
                }
                for t in p.turns
            ],
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# xAPI ingestion
# ---------------------------------------------------------------------------

# Action verbs -> action names; unmapped non-turn verbs pass through as-is.
XAPI_VERB_ACTIONS = {
    "rallied": "rally",
    "fundraised": "fundraiser",
    "canvassed": "grassroots",
    "registered-voters": "voter_drive",
}

_TURN_VERBS = {"turn-completed", "completed-turn"}


def _verb_name(statement: dict) -> str:
    verb = statement.get("verb", {})
    vid = verb.get("id", "")
    if vid:
        return vid.rstrip("/").rsplit("/", 1)[-1]
    display = verb.get("display", {})
    if display:
        return next(iter(display.values()))
    return ""


def _ext_value(extensions: dict, suffix: str):
    for key, value in extensions.items():
        if key.rstrip("/").rsplit("/", 1)[-1] == suffix:
            return value
    return None


def ingest_xapi(statements: list[dict]) -> Dataset:
    """Build a Dataset from xAPI-style statements.

    Minimal profile: actor.account.name identifies the player, timestamps
    order turns, one turn-completed statement per turn carries the full
    state snapshot under a result extension ending in 'state', and action
    statements reference their district via an extension ending in
    'district'.
    """
    usable: dict[str, list[tuple[str, dict]]] = {}
    for i, st in enumerate(statements):
        actor = st.get("actor", {})
        name = actor.get("account", {}).get("name") or actor.get("name")
        ts = st.get("timestamp")
        if not name or not ts:
            warnings.warn(
                f"statement {i} skipped: missing actor or timestamp", XapiWarning
            )
            continue
        usable.setdefault(str(name), []).append((str(ts), st))
    if not usable:
        raise DatasetError("no usable xAPI statements")

    playthroughs = []
    for player_id in sorted(usable):
        entries = sorted(usable[player_id], key=lambda e: e[0])
        level = 1
        turns: list[TurnRecord] = []
        pending_actions: list[tuple[str, int]] = []  # (action, district) before next snapshot
        for _, st in entries:
            verb = _verb_name(st)
            ctx_ext = st.get("context", {}).get("extensions", {})
            lvl = _ext_value(ctx_ext, "level")
            if lvl is not None:
                level = int(lvl)
            result_ext = st.get("result", {}).get("extensions", {})
            if verb in _TURN_VERBS:
                snapshot = _ext_value(result_ext, "state")
                if snapshot is None:
                    warnings.warn(
                        f"turn statement for {player_id} lacks a state "
                        "snapshot; skipped",
                        XapiWarning,
                    )
                    continue
                turn = _turn_from_json(snapshot, 0)
                turn.turn_index = len(turns)
                for action, district_id in pending_actions:
                    d = turn.district(district_id)
                    if d is not None:
                        d.actions[action] = 1
                pending_actions = []
                turns.append(turn)
            else:
                district = _ext_value(result_ext, "district")
                if district is None:
                    district = _ext_value(ctx_ext, "district")
                if district is None:
                    warnings.warn(
                        f"action statement '{verb}' for {player_id} names no "
                        "district; skipped",
                        XapiWarning,
                    )
                    continue
                action = XAPI_VERB_ACTIONS.get(verb, verb)
                pending_actions.append((action, int(district)))
        if pending_actions and turns:
            # actions after the last snapshot land on the final turn
            for action, district_id in pending_actions:
                d = turns[-1].district(district_id)
                if d is not None:
                    d.actions[action] = 1
        if turns:
            playthroughs.append(Playthrough(player_id, level, turns))

    if not playthroughs:
        raise DatasetError("no usable xAPI statements")
    for p in playthroughs:
        p.validate(f"player {p.player_id}: ")
    return _assemble(playthroughs)


# ---------------------------------------------------------------------------
# Registry and parameter lookup
# ---------------------------------------------------------------------------


def build_registry(
    dataset: Dataset,
    overrides: Optional[dict[str, tuple[float, float]]] = None,
) -> ParameterRegistry:
    """Observed min/max domains for unbounded parameters.

    A degenerate domain (min == max) is widened to [v, v+1] with a warning
    so normalization never divides by zero.
    """
    overrides = overrides or {}
    observed: dict[str, list[float]] = {
        "budget": [],
        "duration": [],
        "population": [],
        "favorability": [],
    }
    for p in dataset.playthroughs:
        for t in p.turns:
            observed["budget"].append(t.budget)
            observed["duration"].append(t.duration_s)
            for d in t.districts:
                observed["population"].append(float(d.population))
                observed["favorability"].append(d.favorability)

    domains: dict[str, tuple[float, float]] = {}
    for name, values in observed.items():
        if name in overrides:
            lo, hi = overrides[name]
            if not lo < hi:
                raise ValueError(f"override for '{name}' needs lo < hi")
            domains[name] = (float(lo), float(hi))
            continue
        lo, hi = min(values), max(values)
        if lo == hi:
            warnings.warn(
                f"parameter '{name}' is constant ({lo}); widening domain to "
                f"[{lo}, {lo + 1}]",
                RegistryWarning,
            )
            hi = lo + 1
        domains[name] = (lo, hi)

    return ParameterRegistry(
        district_count=dataset.district_count,
        action_vocabulary=dataset.action_vocabulary,
        domains=domains,
    )


def parameter_value(
    point: TurnPoint,
    ref: ParameterRef,
    dataset: Dataset,
    registry: ParameterRegistry,
) -> float:
    """The normalized parameter value in [0,1] at one point.

    Baseline is exactly 1; action flags are exactly 0.0 or 1.0. A district
    or action missing at this point yields 0 with a warning rather than an
    error, leaving the layer inert there.
    """
    if ref.kind == "baseline":
        return 1.0
    turn = dataset.turn(point)
    if ref.kind == "global":
        raw = turn.budget if ref.name == "budget" else turn.duration_s
        lo, hi = registry.domains[ref.name]
        return _normalize(raw, lo, hi)
    district = turn.district(ref.district_id)
    if district is None:
        warnings.warn(
            f"district {ref.district_id} missing at {point}; using 0",
            MissingParameterWarning,
        )
        return 0.0
    if ref.kind == "district":
        raw = float(getattr(district, ref.field))
        if ref.field in FRACTION_FIELDS:
            lo, hi = 0.0, 1.0
        else:
            lo, hi = registry.domains[ref.field]
        return _normalize(raw, lo, hi)
    # action
    flag = district.actions.get(ref.name)
    if flag is None:
        if ref.name not in registry.action_vocabulary:
            warnings.warn(
                f"action '{ref.name}' not in vocabulary; using 0",
                MissingParameterWarning,
            )
        return 0.0
    return float(flag)


def _normalize(raw: float, lo: float, hi: float) -> float:
    v = (raw - lo) / (hi - lo)
    return min(max(v, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Synthetic playthrough generator
# ---------------------------------------------------------------------------

SYNTHETIC_ACTIONS = ("fundraiser", "grassroots", "rally", "voter_drive")


def assign_strategies(config: SimConfig) -> list[str]:
    """Seeded per-player strategy assignment (shared with analysis code)."""
    rng = random.Random(config.seed)
    names = sorted(config.strategy_mix)
    weights = [config.strategy_mix[n] for n in names]
    return [rng.choices(names, weights=weights)[0] for _ in range(config.n_players)]


def generate_synthetic(config: SimConfig) -> Dataset:
    """Deterministic synthetic cohort.

    Deliberate players focus on a couple of districts, take long turns, and
    gain votes steadily; hurried players rush turns and stay near-flat;
    scattered players act in uniformly random districts.
    """
    config.validate()
    strategies = assign_strategies(config)
    playthroughs = [
        _generate_player(config, i, strategies[i]) for i in range(config.n_players)
    ]
    return _assemble(playthroughs)


def _generate_player(config: SimConfig, index: int, strategy: str) -> Playthrough:
    rng = random.Random(f"{config.seed}:{index}")
    nd = config.n_districts
    focus = rng.sample(range(1, nd + 1), k=min(2, nd))
    populations = [rng.randint(5000, 20000) for _ in range(nd)]
    favorability = [round(rng.uniform(20.0, 60.0), 2) for _ in range(nd)]
    votes = 0
    budget = round(rng.uniform(800.0, 1500.0), 2)

    turns = []
    for turn_index in range(config.n_turns):
        if strategy == "deliberate":
            duration = max(5.0, rng.gauss(75.0, 12.0))
            gain = rng.uniform(80.0, 160.0) * (1.0 + 0.05 * turn_index)
            acted = [rng.choice(focus) for _ in range(2)]
        elif strategy == "hurried":
            duration = max(2.0, rng.gauss(18.0, 5.0))
            gain = rng.uniform(-25.0, 35.0)
            acted = [rng.randint(1, nd)]
        else:  # scattered
            duration = max(3.0, rng.gauss(45.0, 20.0))
            gain = rng.uniform(0.0, 90.0)
            acted = [rng.randint(1, nd) for _ in range(rng.randint(1, 3))]

        votes = max(0, votes + int(round(gain)))
        budget = round(max(0.0, budget + rng.uniform(-120.0, 80.0)), 2)
        actions_by_district: dict[int, set[str]] = {}
        for d in acted:
            actions_by_district.setdefault(d, set()).add(
                rng.choice(SYNTHETIC_ACTIONS)
            )

        districts = []
        for d in range(1, nd + 1):
            taken = actions_by_district.get(d, set())
            drift = 1.5 if taken else rng.uniform(-0.5, 0.5)
            favorability[d - 1] = round(
                min(100.0, max(0.0, favorability[d - 1] + drift)), 2
            )
            unregistered = round(rng.uniform(0.05, 0.30), 4)
            undecided = round(rng.uniform(0.05, 0.40), 4)
            remainder = 1.0 - unregistered - undecided
            for_share = round(remainder * rng.uniform(0.2, 0.8), 4)
            against_share = round(remainder - for_share, 4)
            districts.append(
                DistrictState(
                    district_id=d,
                    population=populations[d - 1],
                    favorability=favorability[d - 1],
                    unregistered=unregistered,
                    undecided=undecided,
                    for_share=for_share,
                    against_share=against_share,
                    actions={a: (1 if a in taken else 0) for a in SYNTHETIC_ACTIONS},
                )
            )
        turns.append(
            TurnRecord(
                turn_index=turn_index,
                total_votes=votes,
                budget=budget,
                duration_s=round(duration, 2),
                districts=districts,
            )
        )
    return Playthrough(player_id=f"sim-{config.seed}-{index:04d}", level=1, turns=turns)

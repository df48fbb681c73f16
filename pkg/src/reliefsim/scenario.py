"""Flight schedules: generation, knowledge masks, arrival-interval scaling and
corpus files."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .agents import CIV_LARGE, CIV_SMALL, MIL_LARGE
from .config import PRESETS, ParameterSet, SimConfig, load_parameter_file, preset
from .inventory import ICU, PALLET, ULD
from .world import TICKS_PER_MINUTE

CORPUS_VERSION = 1
HOUR = 60 * TICKS_PER_MINUTE

__all__ = [
    "FlightEntry", "FlightSchedule", "ScenarioSpec", "GenParams", "generate_schedules",
    "apply_atif", "apply_scenario_mask", "parse_scenario", "military_schedule", "save_corpus",
    "load_corpus", "corpus_hash", "ParameterSet", "PRESETS", "preset", "load_parameter_file",
]


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class FlightEntry:
    id: str
    cls: str
    arrival_tick: int
    manifest: dict  # cargo kind -> kg
    pax: int
    announced: bool = False
    priority: bool = False

    @property
    def has_cargo(self) -> bool:
        return any(v > 0 for v in self.manifest.values())


@dataclass(frozen=True)
class FlightSchedule:
    schedule_id: int
    seed: int
    entries: tuple[FlightEntry, ...]

    def of_class(self, cls: str) -> list[FlightEntry]:
        return [e for e in self.entries if e.cls == cls]

    def civilian(self) -> list[FlightEntry]:
        return [e for e in self.entries if e.cls != MIL_LARGE]


@dataclass(frozen=True)
class GenParams:
    n_large: int = 7
    n_small: int = 46
    p_small_cargo: float = 2 / 3
    large_uld_kg: tuple = (15000, 18000, 20000)
    large_icu_kg: tuple = (5000, 6000, 8000)
    small_icu_kg: tuple = (1000, 1500, 2000)
    large_pax: tuple = (35, 39)  # inclusive range
    large_min_separation: int = 4  # positions in the release order between two large flights
    small_pax: tuple = (2, 12)
    max_civil_on_tarmac: int = 4
    first_spawn_tick: int = 30 * TICKS_PER_MINUTE
    spawn_gap_ticks: tuple = (10 * TICKS_PER_MINUTE, 30 * TICKS_PER_MINUTE)
    military_ticks: tuple = tuple(int(h * HOUR) for h in (1.5, 4, 6.5, 9, 11.5, 14, 16.5))
    military_kg: float = 18000.0
    military_pax: int = 80

    def to_dict(self) -> dict:
        return asdict(self)


def gen_params_from_dict(doc: dict) -> GenParams:
    return GenParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()})


def military_schedule(gen: GenParams) -> list[FlightEntry]:
    return [FlightEntry(f"M{i:02d}", MIL_LARGE, t, {PALLET: gen.military_kg}, gen.military_pax, True)
            for i, t in enumerate(gen.military_ticks, start=1)]


class PlanSpawner:
    """Releases a pre-drawn sequence of civilian flights, one at a time, while
    fewer than ``max_civil_on_tarmac`` civilians are on the ground and a
    random minimum gap since the previous release has elapsed."""

    def __init__(self, plan: list[tuple[str, dict, int]], rng: np.random.Generator, gen: GenParams):
        self.plan = list(plan)
        self.rng = rng
        self.gen = gen
        self.next_allowed = gen.first_spawn_tick
        self.released: list[FlightEntry] = []

    @property
    def exhausted(self) -> bool:
        return len(self.released) == len(self.plan)

    def _room(self, sim) -> bool:
        return sum(1 for a in sim.ground_aircraft() if a.civilian) < self.gen.max_civil_on_tarmac

    def wake(self, sim) -> Optional[int]:
        if self.exhausted or not self._room(sim):
            return None
        return self.next_allowed

    def poll(self, sim) -> Optional[FlightEntry]:
        if self.exhausted or sim.tick < self.next_allowed or not self._room(sim):
            return None
        cls, manifest, pax = self.plan[len(self.released)]
        entry = FlightEntry(f"C{len(self.released) + 1:02d}", cls, sim.tick, manifest, pax)
        self.released.append(entry)
        lo, hi = self.gen.spawn_gap_ticks
        self.next_allowed = sim.tick + int(self.rng.integers(lo, hi + 1))
        return entry


def draw_plan(rng: np.random.Generator, gen: GenParams) -> list[tuple[str, dict, int]]:
    n = gen.n_large + gen.n_small
    sep = max(1, gen.large_min_separation)
    free = n - (gen.n_large - 1) * (sep - 1)
    if free < gen.n_large:
        raise InvalidSpec("large_min_separation too large for the flight count")
    # uniform over placements whose consecutive large flights are >= sep apart
    picks = np.sort(rng.choice(free, size=gen.n_large, replace=False))
    large_at = {int(p) + k * (sep - 1) for k, p in enumerate(picks)}
    plan = []
    for i in range(n):
        if i in large_at:
            manifest = {ULD: float(rng.choice(gen.large_uld_kg)), ICU: float(rng.choice(gen.large_icu_kg))}
            pax = int(rng.integers(gen.large_pax[0], gen.large_pax[1] + 1))
            plan.append((CIV_LARGE, manifest, pax))
        else:
            manifest = {ICU: float(rng.choice(gen.small_icu_kg))} if rng.random() < gen.p_small_cargo else {}
            pax = int(rng.integers(gen.small_pax[0], gen.small_pax[1] + 1))
            plan.append((CIV_SMALL, manifest, pax))
    return plan


def generate_schedule(i: int, seed: int, gen: GenParams, cfg: Optional[SimConfig] = None) -> FlightSchedule:
    """Run the base model (strategy 1, nothing announced) with the spawner and
    freeze the resulting arrival ticks."""
    from .engine import Simulation

    rng = np.random.default_rng([seed, i])
    spawner = PlanSpawner(draw_plan(rng, gen), rng, gen)
    base = replace(cfg or SimConfig(), strategy=1, record_events=False)
    military = military_schedule(gen)
    Simulation(base, military, spawner=spawner).run()
    entries = sorted(spawner.released + military, key=lambda e: (e.arrival_tick, e.id))
    return FlightSchedule(i, seed, tuple(entries))


def generate_schedules(n: int, seed: int, gen: Optional[GenParams] = None,
                       cfg: Optional[SimConfig] = None) -> list[FlightSchedule]:
    if n < 1:
        raise InvalidSpec("need at least one schedule")
    gen = gen or GenParams()
    return [generate_schedule(i, seed, gen, cfg) for i in range(n)]


# -- transformations ----------------------------------------------------------

def _fraction(factor) -> Fraction:
    f = factor if isinstance(factor, Fraction) else Fraction(str(factor))
    if f <= 0:
        raise InvalidSpec(f"ATIF must be positive, got {factor}")
    return f


def apply_atif(schedule: FlightSchedule, factor, scale_military: bool = True) -> FlightSchedule:
    """Scale every inter-arrival gap by ``factor`` around the first civilian arrival."""
    f = _fraction(factor)
    civ = schedule.civilian()
    if not civ or f == 1:
        return schedule
    anchor = min(e.arrival_tick for e in civ)

    def scale(e: FlightEntry) -> FlightEntry:
        if e.cls == MIL_LARGE and not scale_military:
            return e
        return replace(e, arrival_tick=anchor + round((e.arrival_tick - anchor) * f))

    entries = sorted((scale(e) for e in schedule.entries), key=lambda e: (e.arrival_tick, e.id))
    return replace(schedule, entries=tuple(entries))


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str  # "A" | "B" | "C"
    u: int = 0
    strategy: int = 1
    atif: str = "1.0"

    def __post_init__(self) -> None:
        if self.kind not in ("A", "B", "C"):
            raise InvalidSpec(f"unknown scenario {self.kind!r}")
        if self.kind == "C" and not 0 <= self.u <= 7:
            raise InvalidSpec(f"u must be in [0, 7], got {self.u}")
        if self.strategy not in (1, 2):
            raise InvalidSpec(f"unknown strategy {self.strategy}")
        _fraction(self.atif)

    @property
    def scenario_label(self) -> str:
        return f"Cu{self.u}" if self.kind == "C" else self.kind

    @property
    def label(self) -> str:
        base = f"{self.strategy}{self.scenario_label}"
        return base if Fraction(str(self.atif)) == 1 else f"{base}_atif{self.atif}"


def parse_scenario(text: str, strategy: int = 1, atif="1.0") -> ScenarioSpec:
    m = re.fullmatch(r"(A|B)|C(?:u)?(\d+)", text.strip())
    if not m:
        raise InvalidSpec(f"cannot parse scenario {text!r}; use A, B, Cu1, Cu7")
    if m.group(1):
        return ScenarioSpec(m.group(1), 0, strategy, str(atif))
    return ScenarioSpec("C", int(m.group(2)), strategy, str(atif))


def parse_case(text: str, atif="1.0") -> ScenarioSpec:
    """Case labels such as ``1A``, ``2B`` or ``1Cu7`` (strategy digit first)."""
    m = re.fullmatch(r"([12])(.+)", text.strip())
    if not m:
        raise InvalidSpec(f"cannot parse case {text!r}; use e.g. 1A, 2B, 1Cu7")
    return parse_scenario(m.group(2), int(m.group(1)), atif)


def apply_scenario_mask(schedule: FlightSchedule, spec: ScenarioSpec) -> FlightSchedule:
    """Set announced flags on civilian entries; military entries are untouched."""
    large = sorted(e.id for e in schedule.entries if e.cls == CIV_LARGE)
    if spec.kind == "C" and spec.u > len(large):
        raise InvalidSpec(f"u={spec.u} exceeds the {len(large)} large civilian flights")
    hidden: set[str] = set()
    if spec.kind == "C" and spec.u:
        rng = np.random.default_rng([schedule.seed, schedule.schedule_id, 7919])
        # one fixed permutation per schedule, so Cu1's hidden flight is also hidden in Cu7
        order = rng.permutation(len(large))
        hidden = {large[int(j)] for j in order[:spec.u]}

    def flag(e: FlightEntry) -> FlightEntry:
        if e.cls == MIL_LARGE:
            return e
        announced = spec.kind == "B" or (spec.kind == "C" and e.id not in hidden)
        return replace(e, announced=announced)

    return replace(schedule, entries=tuple(flag(e) for e in schedule.entries))


def prepare(schedule: FlightSchedule, spec: ScenarioSpec, scale_military: bool = True) -> FlightSchedule:
    return apply_scenario_mask(apply_atif(schedule, spec.atif, scale_military), spec)


# -- corpus files -------------------------------------------------------------

def _entry_dict(e: FlightEntry) -> dict:
    return {"id": e.id, "class": e.cls, "arrival_tick": e.arrival_tick,
            "manifest": dict(sorted(e.manifest.items())), "pax": e.pax,
            "announced": e.announced, "priority": e.priority}


def corpus_to_dict(schedules: list[FlightSchedule], seed: int, gen: GenParams) -> dict:
    return {
        "corpus_version": CORPUS_VERSION,
        "seed": seed,
        "gen_params": gen.to_dict(),
        "schedules": [{"schedule_id": s.schedule_id, "seed": s.seed,
                       "entries": [_entry_dict(e) for e in s.entries]} for s in schedules],
    }


def corpus_from_dict(doc: dict) -> list[FlightSchedule]:
    if doc.get("corpus_version") != CORPUS_VERSION:
        raise InvalidSpec(f"unsupported corpus_version {doc.get('corpus_version')!r}")
    out = []
    for s in doc["schedules"]:
        entries = tuple(FlightEntry(e["id"], e["class"], int(e["arrival_tick"]),
                                    {k: float(v) for k, v in e["manifest"].items()}, int(e["pax"]),
                                    bool(e["announced"]), bool(e.get("priority", False)))
                        for e in s["entries"])
        out.append(FlightSchedule(int(s["schedule_id"]), int(s["seed"]), entries))
    return out


def corpus_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()


def corpus_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def save_corpus(path: str | Path, schedules: list[FlightSchedule], seed: int, gen: GenParams) -> dict:
    doc = corpus_to_dict(schedules, seed, gen)
    Path(path).write_bytes(corpus_bytes(doc))
    return doc


def load_corpus(path: str | Path) -> tuple[list[FlightSchedule], dict]:
    doc = json.loads(Path(path).read_text())
    return corpus_from_dict(doc), doc


def composition(schedules: list[FlightSchedule]) -> dict:
    """Mean per-schedule counts and pax, for the generate summary."""
    n = len(schedules)
    large = [len(s.of_class(CIV_LARGE)) for s in schedules]
    small = [s.of_class(CIV_SMALL) for s in schedules]
    with_cargo = [sum(1 for e in ss if e.has_cargo) for ss in small]
    large_pax = [e.pax for s in schedules for e in s.of_class(CIV_LARGE)]
    mil_pax = [e.pax for s in schedules for e in s.of_class(MIL_LARGE)]
    return {
        "schedules": n,
        "civ_large": sum(large) / n,
        "small_with_cargo": sum(with_cargo) / n,
        "small_without_cargo": sum(len(ss) for ss in small) / n - sum(with_cargo) / n,
        "military": sum(len(s.of_class(MIL_LARGE)) for s in schedules) / n,
        "civ_large_pax_mean": float(np.mean(large_pax)) if large_pax else 0.0,
        "military_pax_mean": float(np.mean(mil_pax)) if mil_pax else 0.0,
        "last_civil_arrival_h": max(e.arrival_tick for s in schedules for e in s.civilian()) / HOUR,
    }

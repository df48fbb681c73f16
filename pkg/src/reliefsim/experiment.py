"""Running one test case (strategy x scenario x ATIF) over a schedule corpus."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .config import SimConfig
from .coordinator import Estimates
from .engine import EVENT_FIELDS, Simulation, SimOutcome
from .metrics import AircraftRecord, records_from_run
from .scenario import FlightSchedule, ScenarioSpec, prepare


@dataclass
class RunSummary:
    schedule_id: int
    records: list[AircraftRecord]
    oc_excursions: int
    oc_checks: int
    oc_idle_ticks: int
    dispatch_order: list
    tasks: list
    offloads: list
    events_jsonl: Optional[str] = None


@dataclass
class CaseResult:
    spec: ScenarioSpec
    runs: list[RunSummary]

    @property
    def records(self) -> list[AircraftRecord]:
        return [r for run in self.runs for r in run.records]


def events_to_jsonl(events: Sequence[tuple]) -> str:
    lines = [json.dumps(dict(zip(EVENT_FIELDS, e)), sort_keys=True, separators=(",", ":"))
             for e in events]
    return "\n".join(lines) + ("\n" if lines else "")


def case_config(base: SimConfig, spec: ScenarioSpec, record_events: bool) -> SimConfig:
    return replace(base, strategy=spec.strategy, record_events=record_events)


def run_one(schedule: FlightSchedule, spec: ScenarioSpec, cfg: SimConfig,
            estimates: Optional[Estimates] = None, keep_events: bool = False,
            scale_military: bool = True, skip: bool = True) -> tuple[RunSummary, SimOutcome]:
    flights = prepare(schedule, spec, scale_military).entries
    sim = Simulation(case_config(cfg, spec, keep_events), flights, estimates=estimates, skip=skip)
    out = sim.run()
    summary = RunSummary(schedule.schedule_id, records_from_run(schedule.schedule_id, out.aircraft),
                         out.oc_excursions, out.oc_checks, out.oc_idle_ticks, out.dispatch_order,
                         out.tasks, out.offloads,
                         events_to_jsonl(out.events) if keep_events else None)
    return summary, out


def _worker(args) -> RunSummary:
    return run_one(*args)[0]


def run_case(schedules: Sequence[FlightSchedule], spec: ScenarioSpec, cfg: Optional[SimConfig] = None,
             estimates: Optional[Estimates] = None, jobs: int = 1, keep_events: bool = False,
             scale_military: bool = True) -> CaseResult:
    cfg = cfg or SimConfig()
    work = [(s, spec, cfg, estimates, keep_events, scale_military) for s in schedules]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_worker, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        runs = [_worker(w) for w in work]
    runs.sort(key=lambda r: r.schedule_id)
    return CaseResult(spec, runs)


# -- estimate calibration ------------------------------------------------------

LOW_N = 5


@dataclass
class Calibration:
    estimates: Estimates
    counts: dict  # estimate key or "kind/kg/n" -> number of samples

    @property
    def low_n(self) -> list[str]:
        return sorted(k for k, n in self.counts.items() if n < LOW_N)

    def to_dict(self) -> dict:
        doc = self.estimates.to_dict()
        doc["samples"] = dict(sorted(self.counts.items()))
        doc["low_n"] = self.low_n
        return doc


def calibrate_estimates(runs: Sequence[RunSummary]) -> Calibration:
    """Average busy times per task kind and offloading minutes per table cell.

    Table cells without samples keep the default value; the large-offload
    overhead is the mean busy time of offload tasks beyond the lifting span.
    """
    from .coordinator import ESTIMATE_KEYS
    from .strategy import DurationTable
    from .world import TICKS_PER_MINUTE

    busy: dict[str, list[int]] = {}
    spans: dict[tuple, list[int]] = {}
    for run in runs:
        for t in run.tasks:
            busy.setdefault(t.kind, []).append(t.ticks)
        for o in run.offloads:
            spans.setdefault((o.cargo_kind, float(o.kg), o.n_drivers), []).append(o.end - o.start)
    defaults = load_default_estimates()
    ticks, counts = {}, {}
    for key in ESTIMATE_KEYS:
        if key == "offload_large_overhead":
            continue
        vals = busy.get(key, [])
        ticks[key] = round(float(sum(vals)) / len(vals), 1) if vals else defaults.task_ticks[key]
        counts[key] = len(vals)
    table = DurationTable().rows
    large_spans = [s for (kind, kg, _), v in spans.items() if kg in table.get(kind, {}) for s in v]
    large = busy.get("offload_large", [])
    if large and large_spans:
        over = sum(large) / len(large) - sum(large_spans) / len(large_spans)
        ticks["offload_large_overhead"] = round(max(0.0, over), 1)
    else:
        ticks["offload_large_overhead"] = defaults.task_ticks["offload_large_overhead"]
    counts["offload_large_overhead"] = len(large)

    rows = {k: {kg: list(v) for kg, v in r.items()} for k, r in table.items()}
    for (kind, kg, n), vals in sorted(spans.items()):
        counts[f"{kind}/{int(kg)}/{n}"] = len(vals)
        if kind in rows and kg in rows[kind]:
            rows[kind][kg][n - 1] = round(sum(vals) / len(vals) / TICKS_PER_MINUTE, 1)
    for kind, r in rows.items():
        for kg, pair in r.items():
            if not pair[1] < pair[0]:
                # keep the table usable when sampling noise inverts a thin cell
                pair[:] = list(table[kind][kg])
    return Calibration(Estimates(ticks, DurationTable(rows)), counts)


def load_default_estimates() -> Estimates:
    from .coordinator import load_estimates
    return load_estimates()

"""Per-aircraft timeline decomposition, pooled aggregation and Cliff's delta."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .agents import CIV_LARGE, CIV_SMALL, INTERVALS, MIL_LARGE, Aircraft
from .world import TICKS_PER_MINUTE

METRIC_NAMES = {"tat": "TAT", "t_bp": "T_BP", "t_bps": "T_BPS", "t_bc": "T_BC", "t_bo": "T_BO",
                "t_offl": "T_Offl", "t_bb": "T_BB", "t_board": "T_Board", "t_bpsr": "T_BPSR",
                "t_e": "T_E"}
REPORT_METRICS = ("TAT", "T_BP", "T_BPS", "T_BC", "T_BO", "T_Offl", "T_BB", "T_Board", "T_BPSR", "T_E")
COMPARE_METRICS = ("TAT", "T_BPS", "T_BC", "T_BO", "T_Offl", "T_Board", "T_BPSR")
THRESHOLDS = ((0.147, "negligible"), (0.33, "small"), (0.474, "medium"))


class IncompleteAircraft(ValueError):
    pass


class CorpusMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AircraftRecord:
    schedule_id: int
    aircraft_id: str
    cls: str
    has_cargo: bool
    pax: int
    arrival_tick: int
    complete: bool
    minutes: dict  # metric name -> minutes; empty when incomplete

    def value(self, metric: str) -> float:
        return self.minutes[metric]


def decompose_timeline(ac: Aircraft) -> dict[str, float]:
    """Interval durations in minutes keyed by metric name, plus TAT."""
    if ac.timeline is None:
        raise IncompleteAircraft(f"{ac.id} has not departed")
    d = {METRIC_NAMES[k]: v / TICKS_PER_MINUTE for k, v in ac.timeline.as_dict().items()}
    d["TAT"] = ac.timeline.tat / TICKS_PER_MINUTE
    return d


def records_from_run(schedule_id: int, aircraft: Iterable[Aircraft]) -> list[AircraftRecord]:
    out = []
    for ac in aircraft:
        complete = ac.timeline is not None
        out.append(AircraftRecord(schedule_id, ac.id, ac.cls, ac.has_cargo, ac.pax, ac.arrival_tick,
                                  complete, decompose_timeline(ac) if complete else {}))
    return out


FILTERS: dict[str, Callable[[AircraftRecord], bool]] = {
    "civ_large_cargo_pax": lambda r: r.cls == CIV_LARGE and r.has_cargo and r.pax > 0,
    "civ_large": lambda r: r.cls == CIV_LARGE,
    "civ_small": lambda r: r.cls == CIV_SMALL,
    "military": lambda r: r.cls == MIL_LARGE,
}


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    n: int


@dataclass
class AggregateStats:
    filter: str
    stats: dict[str, MetricStats] = field(default_factory=dict)
    n_incomplete: int = 0

    @property
    def empty(self) -> bool:
        return not self.stats

    def mean(self, metric: str) -> float:
        return self.stats[metric].mean

    def std(self, metric: str) -> float:
        return self.stats[metric].std


def select(records: Iterable[AircraftRecord], filter: str = "civ_large_cargo_pax") -> list[AircraftRecord]:
    pred = FILTERS[filter]
    return [r for r in records if pred(r)]


def aggregate(records: Iterable[AircraftRecord], filter: str = "civ_large_cargo_pax",
              per_run: bool = False) -> AggregateStats:
    """Mean and population std per metric over complete aircraft matching
    ``filter``, pooled across runs (or over per-run means with ``per_run``)."""
    chosen = select(records, filter)
    done = [r for r in chosen if r.complete]
    agg = AggregateStats(filter, n_incomplete=len(chosen) - len(done))
    if not done:
        return agg
    for m in REPORT_METRICS:
        if per_run:
            by_run: dict[int, list[float]] = {}
            for r in done:
                by_run.setdefault(r.schedule_id, []).append(r.value(m))
            vals = np.array([np.mean(v) for _, v in sorted(by_run.items())])
        else:
            vals = np.array([r.value(m) for r in done])
        agg.stats[m] = MetricStats(float(vals.mean()), float(vals.std()), int(vals.size))
    return agg


def magnitude(delta: float) -> str:
    a = abs(delta)
    for bound, name in THRESHOLDS:
        if a < bound:
            return name
    return "large"


def cliffs_delta(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, str]:
    """(#{x > y} - #{x < y}) / (|xs| |ys|) over all pairs, with its magnitude."""
    x = np.asarray(xs, dtype=float)
    y = np.sort(np.asarray(ys, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("cliffs_delta needs two non-empty samples")
    below = np.searchsorted(y, x, side="left")  # ys strictly less than x
    above = y.size - np.searchsorted(y, x, side="right")  # ys strictly greater than x
    delta = float((below.sum() - above.sum()) / (x.size * y.size))
    return delta, magnitude(delta)


@dataclass(frozen=True)
class Comparison:
    metric: str
    delta: float
    magnitude: str


def compare_cases(a: Sequence[AircraftRecord], b: Sequence[AircraftRecord],
                  metrics: Sequence[str] = COMPARE_METRICS, filter: str = "civ_large_cargo_pax",
                  corpus_a: Optional[str] = None, corpus_b: Optional[str] = None) -> list[Comparison]:
    if corpus_a is not None and corpus_b is not None and corpus_a != corpus_b:
        raise CorpusMismatch(f"results come from different corpora ({corpus_a} vs {corpus_b})")
    ra = [r for r in select(a, filter) if r.complete]
    rb = [r for r in select(b, filter) if r.complete]
    rows = []
    for m in metrics:
        d, mag = cliffs_delta([r.value(m) for r in ra], [r.value(m) for r in rb])
        rows.append(Comparison(m, d, mag))
    return rows


# -- serialisation ------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.4f}" if math.isfinite(x) else "nan"


def aggregate_csv(agg: AggregateStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "mean_min", "std_min", "n", "filter", "n_incomplete"])
    for m in REPORT_METRICS:
        if m in agg.stats:
            s = agg.stats[m]
            w.writerow([m, _fmt(s.mean), _fmt(s.std), s.n, agg.filter, agg.n_incomplete])
    return buf.getvalue()


RECORD_FIELDS = ["schedule_id", "aircraft_id", "class", "has_cargo", "pax", "arrival_tick",
                 "complete"] + list(REPORT_METRICS)


def records_csv(records: Iterable[AircraftRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        vals = [_fmt(r.minutes[m]) if r.complete else "" for m in REPORT_METRICS]
        w.writerow([r.schedule_id, r.aircraft_id, r.cls, int(r.has_cargo), r.pax, r.arrival_tick,
                    int(r.complete)] + vals)
    return buf.getvalue()


def records_from_csv(text: str) -> list[AircraftRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        complete = row["complete"] == "1"
        minutes = {m: float(row[m]) for m in REPORT_METRICS} if complete else {}
        out.append(AircraftRecord(int(row["schedule_id"]), row["aircraft_id"], row["class"],
                                  row["has_cargo"] == "1", int(row["pax"]), int(row["arrival_tick"]),
                                  complete, minutes))
    return out


def comparison_csv(rows: Sequence[Comparison]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "delta", "magnitude"])
    for r in rows:
        w.writerow([r.metric, f"{r.delta:.4f}", r.magnitude])
    return buf.getvalue()

"""Resource allocation for civilian offloading.

Strategy 1 sends the largest set that is idle right now. Strategy 2 adds
anticipation: the coordinator keeps an estimate of when each busy resource
frees up (``est_rss``) and compares a handful of candidate plans for the
head-of-queue aircraft A, taking the next aircraft B into account, by their
latest estimated finish tick.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .inventory import ICU, ULD
from .world import TICKS_PER_MINUTE

log = logging.getLogger(__name__)

HANDLER, HIGHLOADER, BELT_LOADER, DRIVER = "handler", "highloader", "belt_loader", "driver"
RESOURCE_KINDS = (HANDLER, HIGHLOADER, BELT_LOADER, DRIVER)
LOADER = {ULD: HIGHLOADER, ICU: BELT_LOADER}
CIVIL_KINDS = (ULD, ICU)
MIN, MAX, BEST = "Min", "Max", "Best"
ALL = "All"
LATE_PENALTY = 100_000

# resource id -> (resource kind, estimated tick it becomes free)
EstRss = dict[str, tuple[str, int]]


class PlannerError(RuntimeError):
    """Raised when an option is applied to an estimate list it does not fit."""


class DurationTable:
    """Expected offloading minutes per (cargo kind, kg, number of drivers)."""

    DEFAULT_ROWS = {
        ULD: {15000: (52, 46), 18000: (61, 54), 20000: (70, 61)},
        ICU: {5000: (35, 21), 6000: (37, 25), 8000: (54, 33)},
    }

    def __init__(self, rows: Optional[dict] = None):
        rows = rows if rows is not None else self.DEFAULT_ROWS
        self.rows = {k: {float(kg): tuple(v) for kg, v in r.items()} for k, r in rows.items()}
        for kind, r in self.rows.items():
            for kg, (one, two) in r.items():
                if not two < one:
                    raise ValueError(f"{kind} {kg}: two drivers must be faster than one")

    def minutes(self, kind: str, kg: float, n_drivers: int) -> float:
        if n_drivers not in (1, 2):
            raise ValueError(f"n_drivers must be 1 or 2, got {n_drivers}")
        r = self.rows[kind]
        col = n_drivers - 1
        if kg in r:
            return float(r[kg][col])
        xs = sorted(r)
        log.warning("off-grid %s amount %.0f kg, interpolating", kind, kg)
        i = min(max(bisect.bisect_left(xs, kg), 1), len(xs) - 1)
        x0, x1 = xs[i - 1], xs[i]
        y0, y1 = r[x0][col], r[x1][col]
        return max(0.0, y0 + (y1 - y0) * (kg - x0) / (x1 - x0))

    def ticks(self, kind: str, kg: float, n_drivers: int) -> int:
        return round(self.minutes(kind, kg, n_drivers) * TICKS_PER_MINUTE)


@dataclass(frozen=True)
class PlanAircraft:
    """What the planner needs to know about an aircraft."""

    id: str
    cargo: dict  # undispatched cargo kind -> kg
    ready: int  # earliest tick offloading could begin
    max_start: int

    def kinds(self, selector: str = ALL) -> list[str]:
        return [k for k in CIVIL_KINDS if (selector in (k, ALL)) and self.cargo.get(k, 0) > 0]


@dataclass(frozen=True)
class OptionSet:
    """A candidate allocation for one aircraft.

    ``assign`` holds one ``(cargo kind, n_drivers, resource ids)`` triple per
    cargo type that is started; cargo types not in it finish at ``start_step``.
    """

    aircraft_id: str
    assign: tuple
    est_uld: int
    est_icu: int
    start_step: int
    label: str = ""

    @property
    def ama(self) -> dict[str, int]:
        counts = {k: 0 for k in RESOURCE_KINDS}
        for _, _, ids in self.assign:
            for rid in ids:
                counts[_kind_of(rid)] += 1
        return counts

    @property
    def n_resources(self) -> int:
        return sum(len(ids) for _, _, ids in self.assign)

    @property
    def latest_end(self) -> int:
        return max(self.est_uld, self.est_icu)

    def est_for(self, kind: str) -> int:
        return self.est_uld if kind == ULD else self.est_icu


def _kind_of(rid: str) -> str:
    prefix = rid.rstrip("0123456789")
    return {"H": HANDLER, "HL": HIGHLOADER, "BL": BELT_LOADER, "D": DRIVER}[prefix]


def _make_option(ac: PlanAircraft, assign: list, start: int, table: DurationTable,
                 label: str) -> OptionSet:
    est = {ULD: start, ICU: start}
    for kind, n, _ in assign:
        est[kind] = start + table.ticks(kind, ac.cargo[kind], n)
    return OptionSet(ac.id, tuple(assign), est[ULD], est[ICU], start, label)


def _pools(est: EstRss) -> dict[str, list[tuple[int, str]]]:
    pools: dict[str, list[tuple[int, str]]] = {k: [] for k in RESOURCE_KINDS}
    for rid, (kind, free_at) in est.items():
        pools[kind].append((free_at, rid))
    for p in pools.values():
        p.sort()
    return pools


def free_rss(est: EstRss, now: int) -> EstRss:
    return {rid: v for rid, v in est.items() if v[1] <= now}


def ra_available(est: EstRss, ac: PlanAircraft, now: int, table: DurationTable,
                 max_drivers: int = 2) -> Optional[OptionSet]:
    """Largest allocation that can start at ``now`` from idle resources.

    Cargo types are served longest one-driver duration first, each taking a
    handler, its loader and up to ``max_drivers`` drivers before the next
    type is considered.
    """
    if now < ac.ready:
        return None
    pools = _pools(free_rss(est, now))
    handlers = [rid for _, rid in pools[HANDLER]]
    drivers = [rid for _, rid in pools[DRIVER]]
    loaders = {k: [rid for _, rid in pools[LOADER[k]]] for k in CIVIL_KINDS}
    kinds = sorted(ac.kinds(), key=lambda k: (-table.minutes(k, ac.cargo[k], 1), k))
    started: list[list] = []
    for k in kinds:
        if handlers and loaders[k] and drivers:
            crew = [drivers.pop(0) for _ in range(min(max_drivers, len(drivers)))]
            started.append([k, [handlers.pop(0), loaders[k].pop(0)], crew])
    if not started:
        return None
    assign = [(k, len(d), tuple(hl + d)) for k, hl, d in started]
    return _make_option(ac, assign, now, table, "available")


def ra_ahead(est: EstRss, ac: PlanAircraft, selector: str, mode: str, now: int,
             table: DurationTable) -> Optional[OptionSet]:
    """Earliest start of the Min (one driver) or Max (two drivers) set for the
    selected cargo; ``Best`` keeps whichever of the two finishes first.

    Returns None when the fleet is too small for the set at any time.
    """
    if mode == BEST:
        lo = ra_ahead(est, ac, selector, MIN, now, table)
        hi = ra_ahead(est, ac, selector, MAX, now, table)
        cands = [o for o in (lo, hi) if o is not None]
        if not cands:
            return None
        return min(cands, key=lambda o: (o.latest_end, o.n_resources))
    if mode not in (MIN, MAX):
        raise ValueError(f"unknown mode {mode!r}")
    n = 1 if mode == MIN else 2
    label = f"{selector}-{mode}"
    start = max(now, ac.ready)
    kinds = ac.kinds(selector)
    if not kinds:
        return OptionSet(ac.id, (), start, start, start, label)
    need = {HANDLER: len(kinds), DRIVER: n * len(kinds)}
    for k in kinds:
        need[LOADER[k]] = need.get(LOADER[k], 0) + 1
    pools = _pools(est)
    for kind, count in need.items():
        if len(pools[kind]) < count:
            return None
        start = max(start, pools[kind][count - 1][0])
    taken = {kind: [rid for _, rid in pools[kind][:count]] for kind, count in need.items()}
    assign = []
    for k in kinds:
        ids = [taken[HANDLER].pop(0), taken[LOADER[k]].pop(0)]
        ids += [taken[DRIVER].pop(0) for _ in range(n)]
        assign.append((k, n, tuple(ids)))
    return _make_option(ac, assign, start, table, label)


def rss_update(est: EstRss, option: Optional[OptionSet]) -> EstRss:
    """Mark the option's resources busy until the option's finish estimate."""
    out = dict(est)
    if option is None:
        return out
    for kind, _, ids in option.assign:
        finish = option.est_for(kind)
        for rid in ids:
            if rid not in out:
                raise PlannerError(f"{rid} not in estimate list")
            rkind, free_at = out[rid]
            if free_at > option.start_step:
                raise PlannerError(f"{rid} free at {free_at}, after start {option.start_step}")
            out[rid] = (rkind, finish)
    return out


@dataclass(frozen=True)
class ScoredOption:
    option_a: OptionSet
    option_b: Optional[OptionSet]
    score: int


def candidate_plans(est: EstRss, a: PlanAircraft, b: Optional[PlanAircraft], now: int,
                    table: DurationTable):
    """Yield ``(option A thunk, aircraft for B, B selector)`` in a fixed order."""
    tmin = ra_ahead(est, a, ALL, MIN, now, table)
    if tmin is None or tmin.start_step > now:
        for first, other in ((ULD, ICU), (ICU, ULD)):
            if not a.kinds(first):
                # an empty part for A would dispatch nothing
                continue
            for mode in (MIN, MAX):
                yield (lambda f=first, m=mode: ra_ahead(est, a, f, m, now, table)), a, other
    else:
        yield (lambda: tmin), b, ALL
        yield (lambda: ra_ahead(est, a, ALL, MAX, now, table)), b, ALL
        yield (lambda: ra_available(est, a, now, table)), b, ALL


def score_options(est: EstRss, a: PlanAircraft, b: Optional[PlanAircraft], now: int,
                  table: DurationTable, objective: str = "finish_time") -> list[ScoredOption]:
    scored = []
    for make_a, ac_b, sel_b in candidate_plans(est, a, b, now, table):
        opt_a = make_a()
        if opt_a is None:
            continue
        opt_b = None
        if ac_b is not None:
            opt_b = ra_ahead(rss_update(est, opt_a), ac_b, sel_b, BEST, now, table)
        if objective == "offload_time":
            score = opt_a.latest_end - opt_a.start_step
        else:
            score = opt_a.latest_end
            if opt_b is not None:
                score = max(score, opt_b.latest_end)
        if opt_a.start_step > a.max_start:
            score += LATE_PENALTY
        scored.append(ScoredOption(opt_a, opt_b, score))
    return scored


def generate_best_option(est: EstRss, a: PlanAircraft, b: Optional[PlanAircraft], now: int,
                         table: DurationTable, objective: str = "finish_time") -> Optional[OptionSet]:
    """Option for A with the lowest (penalised) latest finish. Ties go to the
    option finishing A itself earliest, then to enumeration order."""
    scored = score_options(est, a, b, now, table, objective)
    if not scored:
        return None
    return min(scored, key=lambda s: (s.score, s.option_a.latest_end)).option_a


def strategy1_allocate(est: EstRss, ac: PlanAircraft, now: int,
                       table: DurationTable) -> Optional[OptionSet]:
    return ra_available(est, ac, now, table)


def build_est_rss(entries: Iterable[tuple[str, str, int]], now: int) -> EstRss:
    """Normalise (id, kind, free_at) triples: idle resources sit at ``now``,
    busy ones are clamped to at least ``now + 1``."""
    out: EstRss = {}
    for rid, kind, free_at in entries:
        out[rid] = (kind, now if free_at is None else max(int(free_at), now + 1))
    return out

"""The offloading coordinator: task priorities, aircraft checks, dispatch and
military reservations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from .agents import (CIV_LARGE, CIV_SMALL, MIL_LARGE, Aircraft, MilitaryJob, MilitaryRequest,
                     OffloadJob, TaskOrder, offload_duration_military)
from .inventory import (HIGHLOADER, ICU, IN_USE, PALLET, PARKED, PAX_STEPS, RESERVED, TUG, ULD,
                        free_gse_of_kind, reserve_gse)
from .strategy import (BELT_LOADER, DRIVER, HANDLER, LOADER, DurationTable, EstRss, OptionSet,
                       PlanAircraft, build_est_rss, generate_best_option, ra_available)

if TYPE_CHECKING:
    from .engine import Simulation

ESTIMATE_KEYS = ("supply_paxsteps", "retrieve_paxsteps", "offload_small", "offload_military",
                 "offload_large_overhead")


@dataclass
class Estimates:
    """Mean task durations (ticks) the coordinator uses to predict when busy
    resources come back, plus the offloading duration table."""

    task_ticks: dict[str, float]
    table: DurationTable = field(default_factory=DurationTable)

    def __post_init__(self) -> None:
        missing = set(ESTIMATE_KEYS) - set(self.task_ticks)
        if missing:
            raise ValueError(f"estimates missing {sorted(missing)}")

    def ticks(self, key: str) -> int:
        return round(self.task_ticks[key])

    def to_dict(self) -> dict:
        rows = {k: {str(int(kg)): list(v) for kg, v in r.items()} for k, r in self.table.rows.items()}
        return {"task_ticks": dict(self.task_ticks), "duration_table": rows}


def estimates_from_dict(doc: dict) -> Estimates:
    rows = doc.get("duration_table")
    table = DurationTable({k: {float(kg): v for kg, v in r.items()} for k, r in rows.items()}) \
        if rows else DurationTable()
    return Estimates({k: float(v) for k, v in doc["task_ticks"].items() if k in ESTIMATE_KEYS}, table)


def load_estimates(path: Optional[str | Path] = None) -> Estimates:
    if path is None:
        text = resources.files("reliefsim.data").joinpath("estimates_default.json").read_text()
    else:
        text = Path(path).read_text()
    return estimates_from_dict(json.loads(text))


class OffloadingCoordinator:
    role = "oc"

    def __init__(self, id: str, office: str, walk_kmh: float = 5.0):
        self.id = id
        self.office = office
        self.node = office
        self.walk_kmh = walk_kmh
        self.state = "at_office"
        self.busy_until = 0
        self.military_requests: list[MilitaryRequest] = []
        self.pending_handler_reservations: list[str] = []
        self.pending_tug_claims: list[str] = []
        self.awaiting_landing: list[str] = []
        self.seen: dict[str, int] = {}
        self.target: Optional[Aircraft] = None
        self.round_cargo_checks = 0
        self.excursions = 0
        self.checks = 0
        self.idle_ticks = 0
        self.acted = False
        self.planning_wait = False
        self.dispatch_order: list[tuple[int, str]] = []

    # -- bookkeeping --------------------------------------------------------

    def _to(self, sim: "Simulation", new: str, detail=None) -> None:
        sim.log(self.id, self.state, new, detail)
        self.state = new

    def _note(self, sim: "Simulation", detail) -> None:
        sim.log(self.id, self.state, self.state, detail)

    @property
    def at_office(self) -> bool:
        return self.state == "at_office"

    def step(self, sim: "Simulation") -> None:
        self.acted = False
        self.planning_wait = False
        self._standing_grants(sim)
        if sim.tick < self.busy_until:
            return
        getattr(self, "_on_" + self.state)(sim)

    # -- at the office ----------------------------------------------------

    def _on_at_office(self, sim: "Simulation") -> None:
        for ac in sim.ground_aircraft():
            if ac.civilian and ac.id not in self.seen:
                self.seen[ac.id] = sim.tick
        for action in (self._paxsteps, self._civil_offload, self._military, self._check):
            if action(sim):
                self.acted = True
                return

    def select_task(self, sim: "Simulation") -> Optional[str]:
        """Name of the first applicable action category without executing it."""
        if self._paxsteps_requests(sim, serviceable_only=True):
            return "paxsteps"
        if self._offload_queue(sim):
            return "civil_offload"
        if self.military_requests:
            return "military"
        if self._check_candidates(sim, require_seen=True):
            return "check"
        return None

    # 1. pax steps ---------------------------------------------------------

    def _paxsteps_requests(self, sim: "Simulation", serviceable_only: bool = False) -> list:
        reqs = []
        drivers_free = bool(sim.idle_drivers())
        steps_free = bool(free_gse_of_kind(PAX_STEPS, sim.fleet))
        for ac in sim.ground_aircraft():
            if not ac.large_civ:
                continue
            if ac.state == "awaiting_paxsteps_removal" and not ac.retrieval_dispatched:
                if not serviceable_only or drivers_free:
                    reqs.append((ac.milestones["board_end"], 0, ac.arrival_tick, ac.id, "retrieve", ac))
            elif ac.steps_unit is None and ac.id in self.seen and ac.spot is not None:
                if not serviceable_only or (drivers_free and steps_free):
                    reqs.append((self.seen[ac.id], 1, ac.arrival_tick, ac.id, "supply", ac))
        reqs.sort(key=lambda r: r[:4])
        return reqs

    def _paxsteps(self, sim: "Simulation") -> bool:
        for *_, kind, ac in self._paxsteps_requests(sim, serviceable_only=True):
            driver = sim.idle_drivers()[0]
            if kind == "retrieve":
                order = TaskOrder("retrieve_paxsteps", ac.id, sim.tick, gse_id=ac.steps_unit,
                                  driver_ids=(driver.id,))
                ac.retrieval_dispatched = True
            else:
                steps = free_gse_of_kind(PAX_STEPS, sim.fleet)[0]
                ac.steps_unit = steps
                order = TaskOrder("supply_paxsteps", ac.id, sim.tick, gse_id=steps,
                                  driver_ids=(driver.id,))
                sim.set_gse(steps, IN_USE, order)
            order.est_end = sim.tick + sim.estimates.ticks(order.kind)
            self._note(sim, {"dispatch": order.kind, "aircraft": ac.id, "driver": driver.id,
                             "gse": order.gse_id})
            driver.assign(order, None, sim)
            return True
        return False

    # 2. civilian offloading ---------------------------------------------------

    def _offload_queue(self, sim: "Simulation") -> list[Aircraft]:
        q = [ac for ac in sim.ground_aircraft()
             if ac.civilian and ac.checked and ac.state in ("awaiting_offload", "offloading")
             and set(ac.manifest) - ac.dispatched_kinds]
        if sim.cfg.use_priority:
            q.sort(key=lambda a: (not a.priority, a.arrival_tick, a.id))
        else:
            q.sort(key=lambda a: (a.arrival_tick, a.id))
        return q

    def _civil_offload(self, sim: "Simulation") -> bool:
        for ac in self._offload_queue(sim):
            started = bool(ac.dispatched_kinds)
            if self._try_dispatch(ac, sim):
                return True
            if not started:
                # strict chronological order: a later aircraft may not start first
                return False
        return False

    def _try_dispatch(self, ac: Aircraft, sim: "Simulation") -> bool:
        if ac.cls == CIV_SMALL:
            drivers = sim.idle_drivers()
            tugs = free_gse_of_kind(TUG, sim.fleet)
            if not drivers or not tugs:
                return False
            order = TaskOrder("offload_small", ac.id, sim.tick, cargo_kind=ICU,
                              driver_ids=(drivers[0].id,))
            order.est_end = sim.tick + sim.estimates.ticks("offload_small")
            job = OffloadJob(ac, ICU, order)
            self._record_dispatch(sim, ac, {"dispatch": "offload_small", "aircraft": ac.id,
                                            "driver": drivers[0].id, "tug": tugs[0]})
            ac.dispatched_kinds.add(ICU)
            sim.set_gse(tugs[0], IN_USE, order)
            drivers[0].assign(order, job, sim, tug=tugs[0])
            return True
        now = sim.tick
        plan_a = self._plan_aircraft(ac, now, sim)
        est = self.est_rss(sim)
        table = sim.estimates.table
        option = ra_available(est, plan_a, now, table, sim.cfg.available_drivers)
        if option is None:
            return False
        if sim.cfg.strategy == 2:
            option = generate_best_option(est, plan_a, self._next_aircraft(ac, now, sim), now,
                                          table, sim.cfg.objective)
            if option is None or option.start_step > now:
                self.planning_wait = True
                return False
        self._dispatch_option(ac, option, sim)
        return True

    def _plan_aircraft(self, ac: Aircraft, ready: int, sim: "Simulation") -> PlanAircraft:
        cargo = {k: kg for k, kg in ac.manifest.items() if k not in ac.dispatched_kinds}
        return PlanAircraft(ac.id, cargo, ready, ac.arrival_tick + sim.cfg.max_start_ticks)

    def _next_aircraft(self, a: Aircraft, now: int, sim: "Simulation") -> Optional[PlanAircraft]:
        """The next large civilian aircraft the coordinator knows has cargo."""
        cands = []
        for ac in sim.aircraft.values():
            if ac is a or ac.cls != CIV_LARGE or not (set(ac.manifest) - ac.dispatched_kinds):
                continue
            if ac.on_ground and ac.checked and ac.state in ("awaiting_offload", "offloading"):
                cands.append((ac.arrival_tick, ac.id, now, ac))
            elif ac.state == "inbound" and ac.announced:
                cands.append((ac.arrival_tick, ac.id, ac.arrival_tick, ac))
        if not cands:
            return None
        arr, _, ready, ac = min(cands, key=lambda c: (c[0], c[1]))
        return self._plan_aircraft(ac, max(ready, now), sim)

    def _record_dispatch(self, sim: "Simulation", ac: Aircraft, detail: dict) -> None:
        if not ac.dispatched_kinds:
            self.dispatch_order.append((sim.tick, ac.id))
        self._note(sim, detail)

    def _dispatch_option(self, ac: Aircraft, option: OptionSet, sim: "Simulation") -> None:
        table = sim.estimates.table
        for kind, n, ids in option.assign:
            handler = sim.handler_by_id[next(i for i in ids if i.startswith("H") and not i.startswith("HL"))]
            loader = next(i for i in ids if i.startswith(("HL", "BL")))
            drivers = [sim.driver_by_id[i] for i in ids if i.startswith("D")]
            tugs = free_gse_of_kind(TUG, sim.fleet)[:n]
            assert handler.idle and handler.reserved_for is None, handler.id
            assert sim.fleet[loader].state == PARKED, loader
            assert len(tugs) == n and all(d.idle for d in drivers)
            order = TaskOrder("offload_large", ac.id, sim.tick, cargo_kind=kind, gse_id=loader,
                              driver_ids=tuple(d.id for d in drivers), handler_id=handler.id)
            order.est_end = (sim.tick + sim.estimates.ticks("offload_large_overhead")
                             + table.ticks(kind, ac.manifest[kind], n))
            job = OffloadJob(ac, kind, order, gse=loader, n_drivers=n)
            self._record_dispatch(sim, ac, {"dispatch": "offload_large", "aircraft": ac.id,
                                            "cargo": kind, "handler": handler.id, "gse": loader,
                                            "drivers": list(order.driver_ids), "tugs": tugs,
                                            "plan": option.label})
            ac.dispatched_kinds.add(kind)
            sim.set_gse(loader, IN_USE, order)
            handler.assign(order, job, sim)
            for d, t in zip(drivers, tugs):
                sim.set_gse(t, IN_USE, order)
                d.assign(order, job, sim, tug=t)

    # resource estimates -------------------------------------------------

    def est_rss(self, sim: "Simulation") -> EstRss:
        """Per-resource free-at estimates as the coordinator believes them."""
        now = sim.tick
        mil = now + sim.estimates.ticks("offload_military")
        entries = []
        for h in sim.handlers:
            if h.idle:
                entries.append((h.id, HANDLER, None if h.reserved_for is None else mil))
            else:
                entries.append((h.id, HANDLER, h.task.est_end))
        for kind, rkind in ((HIGHLOADER, "highloader"), ("belt_loader", BELT_LOADER)):
            for u in sim.fleet.of_kind(kind):
                entries.append((u.id, rkind, self._gse_free_at(u, sim, mil)))
        # a driver counts as free only together with a tug; pair them in order
        driver_times = [((None if d.idle else d.task.est_end), d.id) for d in sim.drivers]
        driver_times.sort(key=lambda t: (t[0] is not None, t[0] or 0, t[1]))
        tug_times = sorted((self._gse_free_at(u, sim, mil) for u in sim.fleet.of_kind(TUG)),
                           key=lambda t: (t is not None, t or 0))
        for (d_free, did), t_free in zip(driver_times, tug_times):
            if d_free is None and t_free is None:
                free = None
            else:
                free = max(x for x in (d_free, t_free, now) if x is not None)
            entries.append((did, DRIVER, free))
        return build_est_rss(entries, now)

    def _gse_free_at(self, unit, sim: "Simulation", mil: int) -> Optional[int]:
        if unit.state == PARKED:
            return None
        if unit.state == RESERVED:
            return mil
        order = sim.gse_order.get(unit.id)
        return order.est_end if order is not None else mil

    # 3. military ----------------------------------------------------------

    def _military(self, sim: "Simulation") -> bool:
        for req in list(self.military_requests):
            ok = (self._grant_reservation(req, sim) if req.kind == "reserve_highloader"
                  else self._grant_offload(req, sim))
            if ok:
                req.granted = True
                self.military_requests.remove(req)
                return True
        return False

    def _standing_grants(self, sim: "Simulation") -> None:
        for ac in sim.ground_aircraft():
            if ac.id in self.awaiting_landing:
                self.awaiting_landing.remove(ac.id)
                self._reserve_handler(ac.id, sim)
        # everything held since the MOVCON grant: no office visit needed
        for req in list(self.military_requests):
            if req.kind != "offload":
                continue
            held = any(h.idle and h.reserved_for == req.aircraft_id for h in sim.handlers) and any(
                u.state == RESERVED and u.reserved_by == req.aircraft_id for u in sim.fleet.of_kind(TUG))
            if held and self._grant_offload(req, sim):
                req.granted = True
                self.military_requests.remove(req)

    def _mil_highloader(self, sim: "Simulation", holder: str) -> Optional[str]:
        ids = free_gse_of_kind(HIGHLOADER, sim.fleet, for_military=True, holder=holder)
        return ids[0] if ids else None

    def _reserve_handler(self, holder: str, sim: "Simulation") -> None:
        if any(h.reserved_for == holder for h in sim.handlers) or holder in self.pending_handler_reservations:
            return
        idle = [h for h in sim.handlers if h.idle and h.reserved_for is None]
        if idle:
            idle[0].reserved_for = holder
            self._note(sim, {"reserve_handler": idle[0].id, "aircraft": holder})
        else:
            self.pending_handler_reservations.append(holder)
            self._note(sim, {"reserve_handler": "pending", "aircraft": holder})

    def _claim_tug(self, holder: str, sim: "Simulation") -> None:
        # a military flight holds on to the first tug that parks
        held = any(u.state == RESERVED and u.reserved_by == holder for u in sim.fleet.of_kind(TUG))
        if held or holder in self.pending_tug_claims:
            return
        tugs = free_gse_of_kind(TUG, sim.fleet)
        if tugs:
            reserve_gse(tugs[0], sim.fleet, holder=holder)
            sim.log(tugs[0], PARKED, RESERVED, {"holder": holder})
        else:
            self.pending_tug_claims.append(holder)

    def assign_pending_tug(self, uid: str, sim: "Simulation") -> None:
        if self.pending_tug_claims and sim.fleet[uid].kind == TUG:
            holder = self.pending_tug_claims.pop(0)
            reserve_gse(uid, sim.fleet, holder=holder)
            sim.log(uid, PARKED, RESERVED, {"holder": holder})

    def assign_pending_reservation(self, handler, sim: "Simulation") -> None:
        if self.pending_handler_reservations and handler.reserved_for is None:
            holder = self.pending_handler_reservations.pop(0)
            handler.reserved_for = holder
            sim.log(handler.id, handler.state, handler.state, {"reserved_for": holder})

    def _grant_reservation(self, req: MilitaryRequest, sim: "Simulation") -> bool:
        # tug and handler are claimed at once; the request stays open until the highloader is free
        self._claim_tug(req.aircraft_id, sim)
        if req.aircraft_id not in self.awaiting_landing:
            self.awaiting_landing.append(req.aircraft_id)
        hl = self._mil_highloader(sim, req.aircraft_id)
        if hl is None:
            return False
        if sim.fleet[hl].state == PARKED:
            reserve_gse(hl, sim.fleet, holder=req.aircraft_id)
            sim.log(hl, PARKED, RESERVED, {"holder": req.aircraft_id})
        self._note(sim, {"granted": "reserve_highloader", "aircraft": req.aircraft_id, "gse": hl})
        return True

    def _grant_offload(self, req: MilitaryRequest, sim: "Simulation") -> bool:
        ac = sim.aircraft[req.aircraft_id]
        needs_hl = ac.manifest.get(PALLET, 0) > 0
        hl = self._mil_highloader(sim, ac.id) if needs_hl else None
        handler = next((h for h in sim.handlers if h.idle and h.reserved_for == ac.id), None)
        if handler is None and needs_hl:
            handler = next((h for h in sim.handlers if h.idle and h.reserved_for is None
                            and not self.pending_handler_reservations), None)
        tugs = free_gse_of_kind(TUG, sim.fleet, for_military=True, holder=ac.id)
        if (needs_hl and (hl is None or handler is None)) or not tugs or not sim.ledger.can_reserve():
            if needs_hl and handler is None:
                self._reserve_handler(ac.id, sim)
            self._claim_tug(ac.id, sim)
            return False
        if ac.id in self.pending_handler_reservations:
            self.pending_handler_reservations.remove(ac.id)
        if ac.id in self.pending_tug_claims:
            self.pending_tug_claims.remove(ac.id)
        # an offload that overtook its own reservation leaves nothing to hold
        self.military_requests = [r for r in self.military_requests
                                  if not (r.kind == "reserve_highloader" and r.aircraft_id == ac.id)]
        slots = sim.ledger.reserve()
        tug = tugs[0]
        order = TaskOrder("offload_military", ac.id, sim.tick, cargo_kind=PALLET, gse_id=hl,
                          handler_id=handler.id if handler else None)
        order.est_end = sim.tick + sim.estimates.ticks("offload_military")
        job = MilitaryJob(ac, order, hl, tug, slots)
        sim.set_gse(tug, IN_USE, order)
        self._note(sim, {"granted": "offload", "aircraft": ac.id, "handler": order.handler_id,
                         "gse": hl, "tug": tug, "ledger": list(slots)})
        sim.start_tug_delivery(job)
        if handler is not None:
            sim.set_gse(hl, IN_USE, order)
            handler.assign(order, job, sim)
        else:
            job.handler_present = True
        return True

    # 4. checking --------------------------------------------------------

    def _check_candidates(self, sim: "Simulation", require_seen: bool) -> list[Aircraft]:
        out = []
        for ac in sim.ground_aircraft():
            if not ac.civilian or ac.checked or ac.announced or ac.spot is None:
                continue
            if require_seen and ac.id not in self.seen:
                continue
            if ac.large_civ and ac.steps_unit is None:
                continue
            out.append(ac)
        out.sort(key=lambda a: (a.arrival_tick, a.id))
        return out

    def _check(self, sim: "Simulation") -> bool:
        cands = self._check_candidates(sim, require_seen=True)
        if not cands:
            return False
        self.excursions += 1
        self.round_cargo_checks = 0
        self._go_check(cands[0], sim)
        return True

    def _go_check(self, ac: Aircraft, sim: "Simulation") -> None:
        self.target = ac
        ac.check_pending = True
        self.busy_until = sim.tick + sim.travel(self.node, ac.spot, self.walk_kmh)
        self._dest = ac.spot
        self._to(sim, "walk_to_aircraft", {"aircraft": ac.id})

    def _on_walk_to_aircraft(self, sim: "Simulation") -> None:
        self.node = self._dest
        self._to(sim, "wait_at_aircraft", {"aircraft": self.target.id})
        self._on_wait_at_aircraft(sim)

    def _on_wait_at_aircraft(self, sim: "Simulation") -> None:
        ac = self.target
        if ac.state != "parked" or (ac.large_civ and not ac.steps_present):
            return
        self.busy_until = sim.tick + (sim.cfg.check_ticks if ac.large_civ else sim.cfg.check_ticks_small)
        self._to(sim, "checking", {"aircraft": ac.id})

    def _on_checking(self, sim: "Simulation") -> None:
        ac = self.target
        ac.mark_checked(sim)
        self.checks += 1
        if ac.has_cargo:
            self.round_cargo_checks += 1
        self.target = None
        if self.round_cargo_checks < sim.cfg.max_checks_per_round:
            cands = [c for c in self._check_candidates(sim, require_seen=False)
                     if not c.check_pending]
            if cands:
                self._go_check(cands[0], sim)
                return
        self.busy_until = sim.tick + sim.travel(self.node, self.office, self.walk_kmh)
        self._dest = self.office
        self._to(sim, "walk_to_office")

    def _on_walk_to_office(self, sim: "Simulation") -> None:
        self.node = self._dest
        self._to(sim, "at_office")
        self._on_at_office(sim)

"""Tick loop tying layout, equipment and agents together.

Each processed tick runs: arrivals and scheduled ATC calls, expired timers,
then agent steps in the fixed order aircraft, OC, handlers, drivers, ATC,
MOVCON, military coordinator. When a tick ends without any logged transition
the loop jumps straight to the next tick at which something is due; a run
with ``skip=False`` visits every tick and produces the same event log.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol

from .agents import (MIL_LARGE, Aircraft, AtcAgent, AtcCall, Driver, Handler, MilitaryCoordinator,
                     MilitaryJob, MovconAgent, OffloadJob, build_cargo, offload_duration_military)
from .config import SimConfig
from .coordinator import Estimates, OffloadingCoordinator, load_estimates
from .inventory import (AIRCRAFT, DOLLY, DROP_OFF, GSE, IN_USE, PARKED, CargoItem, GseFleet,
                        MilitaryResourceLedger, transfer_cargo)
from .world import LayoutGraph, ParkingRegistry, assign_parking, load_layout, travel_ticks

EVENT_FIELDS = ("tick", "agent", "from", "to", "detail")


class FlightLike(Protocol):
    id: str
    cls: str
    arrival_tick: int
    manifest: dict
    pax: int
    announced: bool


class Spawner(Protocol):
    exhausted: bool

    def wake(self, sim: "Simulation") -> Optional[int]: ...
    def poll(self, sim: "Simulation") -> Optional[FlightLike]: ...


@dataclass
class TaskRecord:
    kind: str
    aircraft_id: str
    issued: int
    done: int

    @property
    def ticks(self) -> int:
        return self.done - self.issued


@dataclass
class OffloadRecord:
    aircraft_id: str
    cargo_kind: str
    kg: float
    n_drivers: int
    start: int
    end: int


@dataclass
class SimOutcome:
    aircraft: list[Aircraft]
    events: list[tuple]
    tasks: list[TaskRecord]
    offloads: list[OffloadRecord]
    oc_excursions: int
    oc_checks: int
    oc_idle_ticks: int
    dispatch_order: list[tuple[int, str]]
    final_tick: int
    processed_ticks: int


class Simulation:
    def __init__(self, cfg: SimConfig, flights: Iterable[FlightLike], layout: Optional[LayoutGraph] = None,
                 estimates: Optional[Estimates] = None, spawner: Optional[Spawner] = None,
                 skip: bool = True, check_every_tick: bool = False,
                 tick_hook: Optional[Callable[["Simulation"], None]] = None):
        self.cfg = cfg
        self.layout = layout or load_layout(cfg.layout_path)
        self.estimates = estimates or load_estimates()
        self.spawner = spawner
        self.skip = skip
        self.check_every_tick = check_every_tick
        self.tick_hook = tick_hook
        self.tick = 0
        self.events: list[tuple] = []
        self._changed = False
        self._processed = 0

        lay = self.layout
        self.office = lay.node_of_kind("oc_office")
        self.gse_home = lay.node_of_kind("gse_parking")
        self.drop_civ = lay.node_of_kind("drop_off_civilian")
        self.drop_mil = lay.node_of_kind("drop_off_military")
        self.movcon_post = lay.node_of_kind("movcon_post")
        self.parking = ParkingRegistry(lay)
        self.fleet = GseFleet.build(cfg.fleet.gse_counts(), self.gse_home)
        self.ledger = MilitaryResourceLedger(cfg.fleet.mil_handling_agents, cfg.fleet.forklifts)
        self.gse_order: dict = {}

        fl = cfg.fleet
        self.handlers = [Handler(f"H{i}", self.office, cfg.walk_civ_kmh, cfg.drive_speed_kmh)
                         for i in range(1, fl.handlers + 1)]
        self.drivers = [Driver(f"D{i}", self.office, cfg.walk_civ_kmh, cfg.drive_speed_kmh)
                        for i in range(1, fl.drivers + 1)]
        self.handler_by_id = {h.id: h for h in self.handlers}
        self.driver_by_id = {d.id: d for d in self.drivers}
        self.oc = OffloadingCoordinator("OC", self.office, cfg.walk_civ_kmh)
        self.atc = AtcAgent("ATC", lay.node_of_kind("ground_tower"), cfg.walk_mil_kmh)
        self.movcon = MovconAgent("MOVCON", self.movcon_post, cfg.walk_mil_kmh)
        self.milcoord = MilitaryCoordinator("MILCOORD", lay.node_of_kind("mil_coord_post"),
                                            cfg.walk_mil_kmh)

        self.aircraft: dict[str, Aircraft] = {}
        self._pending: list[tuple[int, str]] = []
        self._calls: list[tuple[int, str]] = []
        self._ground: list[Aircraft] = []
        self.items: list[CargoItem] = []
        self._next_item = 0
        self.delivered = 0
        self.delivered_mil = 0
        self._timers: list = []
        self._seq = itertools.count()
        self.tasks: list[TaskRecord] = []
        self.offloads: list[OffloadRecord] = []
        for f in flights:
            self.add_flight(f)

    # -- setup -------------------------------------------------------------

    def add_flight(self, f: FlightLike) -> Aircraft:
        if f.id in self.aircraft:
            raise ValueError(f"duplicate aircraft id {f.id}")
        ac = Aircraft(f.id, f.cls, f.arrival_tick, f.manifest, f.pax, f.announced,
                      getattr(f, "priority", False))
        self.aircraft[ac.id] = ac
        items = build_cargo(ac, self._next_item)
        self._next_item += len(items)
        self.items.extend(items)
        heapq.heappush(self._pending, (ac.arrival_tick, ac.id))
        if ac.cls == MIL_LARGE:
            heapq.heappush(self._calls, (max(ac.arrival_tick - self.cfg.atc_call_lead_ticks, 0), ac.id))
        return ac

    # -- helpers used by agents ------------------------------------------------

    def log(self, agent: str, old: str, new: str, detail=None) -> None:
        self._changed = True
        if self.cfg.record_events:
            self.events.append((self.tick, agent, old, new, detail))

    def travel(self, a: str, b: str, speed_kmh: float) -> int:
        return travel_ticks(self.layout.distance(a, b), speed_kmh)

    def taxi_ticks(self, a: str, b: str) -> int:
        return travel_ticks(self.layout.route_length(a, b), self.cfg.taxi_speed_kmh)

    def request_parking(self, ac: Aircraft) -> Optional[str]:
        kind = "civilian" if ac.civilian else "military"
        spot = assign_parking(kind, self.parking, self.office, self.layout)
        if spot is not None:
            self.parking.occupy(spot, ac.id)
        return spot

    def ground_aircraft(self) -> list[Aircraft]:
        return self._ground

    def idle_drivers(self) -> list[Driver]:
        return [d for d in self.drivers if d.idle]

    def set_gse(self, uid: str, state: str, order=None) -> None:
        unit = self.fleet[uid]
        old = unit.state
        unit.set_state(state)
        if state == PARKED:
            self.gse_order.pop(uid, None)
        elif order is not None:
            self.gse_order[uid] = order
        self.log(uid, old, state, None if order is None else {"task": order.kind, "aircraft": order.aircraft_id})
        if state == PARKED:
            self.oc.assign_pending_tug(uid, self)

    def task_done(self, agent, order) -> None:
        self.tasks.append(TaskRecord(order.kind, order.aircraft_id, order.issued_tick, self.tick))

    def on_handler_idle(self, handler: Handler) -> None:
        self.oc.assign_pending_reservation(handler, self)

    def record_offload(self, job: OffloadJob) -> None:
        ac = job.aircraft
        self.offloads.append(OffloadRecord(ac.id, job.kind, ac.manifest[job.kind], job.n_drivers,
                                           job.start_tick, job.end_tick))

    def on_departure(self, ac: Aircraft) -> None:
        self._ground.remove(ac)

    def schedule(self, at: int, kind: str, payload) -> None:
        heapq.heappush(self._timers, (at, next(self._seq), kind, payload))

    # -- military -------------------------------------------------------------

    def start_tug_delivery(self, job: MilitaryJob) -> None:
        self.fleet[job.tug_id].current_node = "moving"
        self.schedule(self.tick + self.travel(self.gse_home, job.aircraft.spot, self.cfg.drive_speed_kmh),
                      "tug_arrive", job)

    def military_try_start(self, job: MilitaryJob) -> None:
        if job.started or not (job.tug_at_aircraft and job.handler_present):
            return
        ac = job.aircraft
        job.started = True
        ticks = offload_duration_military(sum(ac.manifest.values()), self.cfg.params.p463l_ac_gse)
        self.ledger.start_timer(job.ledger_slots, ticks)
        ac.begin_offload(self)
        self.log("MILCOORD", self.milcoord.state, self.milcoord.state,
                 {"timer": ac.id, "ticks": ticks, "ledger": list(job.ledger_slots)})
        job.end_tick = self.tick + ticks
        if job.order.handler_id is not None:
            h = self.handler_by_id[job.order.handler_id]
            h.busy_until = job.end_tick
            h._to(self, "mil_offloading", {"aircraft": ac.id})
        else:
            self.schedule(job.end_tick, "mil_done", job)

    def military_finish(self, job: MilitaryJob) -> None:
        ac = job.aircraft
        for kind, stack in ac.cargo.items():
            while stack:
                item = stack.pop()
                if job.hl_id is not None:
                    transfer_cargo(item, (AIRCRAFT, ac.id), (GSE, job.hl_id))
                    transfer_cargo(item, (GSE, job.hl_id), (DOLLY, job.tug_id))
                else:
                    transfer_cargo(item, (AIRCRAFT, ac.id), (DOLLY, job.tug_id))
                transfer_cargo(item, (DOLLY, job.tug_id), (DROP_OFF, "military"))
                self.delivered_mil += 1
        ac.finish_offload(self)
        self.fleet[job.tug_id].current_node = "moving"
        back = self.travel(ac.spot, self.drop_mil, self.cfg.drive_speed_kmh) + \
            self.travel(self.drop_mil, self.gse_home, self.cfg.drive_speed_kmh)
        self.schedule(self.tick + back, "tug_return", job)

    def _fire(self, kind: str, payload) -> None:
        if kind == "tug_arrive":
            payload.tug_at_aircraft = True
            self.fleet[payload.tug_id].current_node = payload.aircraft.spot
            self.log(payload.tug_id, IN_USE, IN_USE, {"arrived": payload.aircraft.id})
            self.military_try_start(payload)
        elif kind == "tug_return":
            self.fleet[payload.tug_id].current_node = self.gse_home
            self.set_gse(payload.tug_id, PARKED)
        elif kind == "mil_done":
            self.military_finish(payload)

    # -- main loop -------------------------------------------------------------

    def _arrivals(self) -> None:
        while self._calls and self._calls[0][0] <= self.tick:
            _, aid = heapq.heappop(self._calls)
            ac = self.aircraft[aid]
            call = AtcCall(ac.id, ac.arrival_tick, dict(ac.manifest), ac.pax)
            self.log(ac.id, ac.state, ac.state, {"atc_call": ac.arrival_tick})
            self.atc.receive(call, self)
        if self.spawner is not None:
            f = self.spawner.poll(self)
            if f is not None:
                self.add_flight(f)
        while self._pending and self._pending[0][0] <= self.tick:
            _, aid = heapq.heappop(self._pending)
            ac = self.aircraft[aid]
            ac.milestones["arrival"] = ac.arrival_tick
            ac._to(self, "taxiing_in")
            self._ground.append(ac)
        self._ground.sort(key=lambda a: (a.arrival_tick, a.id))

    def process_tick(self) -> None:
        self._arrivals()
        while self._timers and self._timers[0][0] <= self.tick:
            _, _, kind, payload = heapq.heappop(self._timers)
            self._fire(kind, payload)
        for ac in list(self._ground):
            ac.step(self)
        self.oc.step(self)
        for h in self.handlers:
            h.step(self)
        for d in self.drivers:
            d.step(self)
        self.atc.step(self)
        self.movcon.step(self)
        self.milcoord.step(self)
        self._processed += 1
        if self.check_every_tick:
            self.check_conservation()
        if self.tick_hook is not None:
            self.tick_hook(self)

    def _wake(self) -> int:
        t = self.tick
        cands = [self.cfg.horizon_ticks]
        if self.oc.planning_wait:
            return t + 1
        for agent in itertools.chain(self._ground, (self.oc,), self.handlers, self.drivers,
                                     (self.atc, self.movcon, self.milcoord)):
            if agent.busy_until > t:
                cands.append(agent.busy_until)
        if self._pending:
            cands.append(self._pending[0][0])
        if self._calls:
            cands.append(self._calls[0][0])
        if self._timers:
            cands.append(self._timers[0][0])
        nxt = self.ledger.next_expiry()
        if nxt is not None:
            cands.append(t + nxt)
        if self.spawner is not None:
            w = self.spawner.wake(self)
            if w is not None:
                cands.append(max(w, t + 1))
        return max(min(cands), t + 1)

    def _advance_to(self, new_tick: int) -> None:
        self.ledger.advance(new_tick - self.tick)
        self.tick = new_tick

    def finished(self) -> bool:
        if self._pending or self._calls or self._timers or self._ground:
            return False
        if self.spawner is not None and not self.spawner.exhausted:
            return False
        people = itertools.chain(self.handlers, self.drivers, (self.atc, self.movcon, self.milcoord))
        return all(p.idle for p in people) and self.oc.at_office

    def run(self) -> SimOutcome:
        horizon = self.cfg.horizon_ticks
        while self.tick < horizon and not self.finished():
            self._changed = False
            self.process_tick()
            nxt = self.tick + 1
            if self.skip and not self._changed:
                nxt = self._wake()
            nxt = min(nxt, horizon)
            if self.oc.at_office and not self.oc.acted:
                self.oc.idle_ticks += nxt - self.tick
            self._advance_to(nxt)
        return SimOutcome(
            aircraft=sorted(self.aircraft.values(), key=lambda a: (a.arrival_tick, a.id)),
            events=self.events, tasks=self.tasks, offloads=self.offloads,
            oc_excursions=self.oc.excursions, oc_checks=self.oc.checks,
            oc_idle_ticks=self.oc.idle_ticks, dispatch_order=self.oc.dispatch_order,
            final_tick=self.tick, processed_ticks=self._processed)

    # -- invariants -------------------------------------------------------------

    def cargo_census(self) -> dict[str, int]:
        census = {AIRCRAFT: 0, GSE: 0, DOLLY: 0, DROP_OFF: 0}
        for item in self.items:
            census[item.location[0]] += 1
        return census

    def check_conservation(self) -> None:
        """Cross-check item locations against what the agents think they hold."""
        census = self.cargo_census()
        in_holds = sum(ac.remaining() for ac in self.aircraft.values())
        lifting = sum(1 for h in self.handlers if h.lifting is not None)
        on_dollies = sum(len(d.load) for d in self.drivers)
        expected = {AIRCRAFT: in_holds, GSE: lifting, DOLLY: on_dollies,
                    DROP_OFF: self.delivered + self.delivered_mil}
        if census != expected or sum(census.values()) != len(self.items):
            raise AssertionError(f"cargo not conserved at tick {self.tick}: {census} vs {expected}")


def run_simulation(cfg: SimConfig, flights: Iterable[FlightLike], **kw) -> SimOutcome:
    return Simulation(cfg, flights, **kw).run()

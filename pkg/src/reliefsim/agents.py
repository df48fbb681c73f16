"""Agent finite-state machines and the handling-time arithmetic they share.

Every agent exposes ``step(sim)``; the engine calls it once per tick in a fixed
order. Timed states carry ``busy_until`` (absolute tick); the state's handler
runs once the clock reaches it. Polling states (waiting for a dolly, for the
coordinator, ...) re-evaluate their condition on every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .config import ParameterSet
from .inventory import (AIRCRAFT, DOLLY, DROP_OFF, GSE, ICU, IN_USE, PALLET, PARKED, ULD,
                        CargoItem, split_into_units, transfer_cargo)
from .world import TICK_SECONDS, duration_ticks

if TYPE_CHECKING:
    from .engine import Simulation

CIV_LARGE, CIV_SMALL, MIL_LARGE = "civ_large", "civ_small", "military_large"
AIRCRAFT_CLASSES = (CIV_LARGE, CIV_SMALL, MIL_LARGE)

INTERVALS = ("t_bp", "t_bps", "t_bc", "t_bo", "t_offl", "t_bb", "t_board", "t_bpsr", "t_e")


# ---------------------------------------------------------------- durations

def unit_transfer_ticks(weight: float, rate: float) -> int:
    return duration_ticks(weight / rate)


def terminal_rate(kind: str, rates: ParameterSet) -> float:
    return rates.uld_gse_tb if kind == ULD else rates.icu_general


def loading_rate(kind: str, rates: ParameterSet) -> float:
    return {ULD: rates.uld_ac_gse, ICU: rates.icu_general, PALLET: rates.p463l_ac_gse}[kind]


def offload_duration_large(cargo_kind: str, total_kg: float, rates: ParameterSet, n_drivers: int,
                           batch_capacity: int = 4, haul_ticks: int = 9) -> int:
    """Ticks from first unit lifted until the aircraft hold is empty.

    One handler lifts units onto whichever dolly is docked; a full dolly (or the
    last partial batch) leaves for the drop-off, is unloaded there at the
    terminal rate and comes back. `haul_ticks` is the one-way stand to drop-off
    drive. All dollies are docked at tick 0.
    """
    if total_kg <= 0:
        return 0
    if n_drivers not in (1, 2):
        raise ValueError(f"n_drivers must be 1 or 2, got {n_drivers}")
    units = split_into_units(cargo_kind, total_kg)
    rate, tb_rate = loading_rate(cargo_kind, rates), terminal_rate(cargo_kind, rates)
    back_at = [0] * n_drivers
    t = 0
    for i in range(0, len(units), batch_capacity):
        batch = units[i:i + batch_capacity]
        d = min(range(n_drivers), key=lambda k: (back_at[k], k))
        t = max(t, back_at[d])
        t += sum(unit_transfer_ticks(w, rate) for w in batch)
        unload = sum(unit_transfer_ticks(w, tb_rate) for w in batch)
        back_at[d] = t + 2 * haul_ticks + unload
    return t


def offload_duration_small(total_kg: float, rates: ParameterSet, batch_capacity: int = 4,
                           haul_ticks: int = 9) -> int:
    """A lone driver loading ICU onto its own dolly and shuttling to the drop-off."""
    if total_kg <= 0:
        return 0
    units = split_into_units(ICU, total_kg)
    t = 0
    for i in range(0, len(units), batch_capacity):
        batch = units[i:i + batch_capacity]
        if i:
            t += 2 * haul_ticks
        t += sum(unit_transfer_ticks(w, rates.icu_general) for w in batch)
        if i + batch_capacity < len(units):
            t += sum(unit_transfer_ticks(w, rates.icu_general) for w in batch)
    return t


def offload_duration_military(total_kg: float, rate_463l: float) -> int:
    if total_kg < 0:
        raise ValueError("cargo must be non-negative")
    return duration_ticks(total_kg / rate_463l) if total_kg else 0


def boarding_duration(pax: int, rate: float) -> int:
    if pax < 0:
        raise ValueError("pax must be non-negative")
    return duration_ticks(pax * rate)


# ---------------------------------------------------------------- aircraft

@dataclass
class AircraftTimeline:
    t_bp: int = 0
    t_bps: int = 0
    t_bc: int = 0
    t_bo: int = 0
    t_offl: int = 0
    t_bb: int = 0
    t_board: int = 0
    t_bpsr: int = 0
    t_e: int = 0

    @property
    def tat(self) -> int:
        return sum(getattr(self, k) for k in INTERVALS)

    def as_dict(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in INTERVALS}

    @classmethod
    def from_milestones(cls, m: dict[str, int]) -> "AircraftTimeline":
        order = ["arrival", "parked", "ps_ready", "checked", "offl_start", "offl_end",
                 "board_start", "board_end", "ps_removed", "exit"]
        marks = []
        last = m["arrival"]
        for key in order:
            last = max(last, m.get(key, last))
            marks.append(last)
        return cls(*(b - a for a, b in zip(marks, marks[1:])))


class Aircraft:
    kind = "aircraft"

    def __init__(self, id: str, cls: str, arrival_tick: int, manifest: dict[str, float], pax: int,
                 announced: bool = False, priority: bool = False):
        if cls not in AIRCRAFT_CLASSES:
            raise ValueError(f"unknown aircraft class {cls!r}")
        for k in manifest:
            if (k == PALLET) != (cls == MIL_LARGE) and k != ICU:
                raise ValueError(f"{cls} cannot carry {k}")
        self.id = id
        self.cls = cls
        self.arrival_tick = arrival_tick
        self.manifest = {k: float(v) for k, v in manifest.items() if v > 0}
        self.pax = pax
        self.announced = announced
        self.priority = priority
        self.state = "inbound"
        self.busy_until = 0
        self.spot: Optional[str] = None
        self.milestones: dict[str, int] = {}
        self.cargo: dict[str, list[CargoItem]] = {}
        self.checked = False
        self.check_pending = False
        self.dispatched_kinds: set[str] = set()
        self.steps_unit: Optional[str] = None
        self.steps_present = False
        self.retrieval_dispatched = False
        self.timeline: Optional[AircraftTimeline] = None

    @property
    def civilian(self) -> bool:
        return self.cls != MIL_LARGE

    @property
    def large_civ(self) -> bool:
        return self.cls == CIV_LARGE

    @property
    def has_cargo(self) -> bool:
        return bool(self.manifest)

    def remaining(self, kind: Optional[str] = None) -> int:
        if kind is None:
            return sum(len(v) for v in self.cargo.values())
        return len(self.cargo.get(kind, ()))

    @property
    def on_ground(self) -> bool:
        return self.state not in ("inbound", "departed")

    def _to(self, sim: "Simulation", new: str, detail=None) -> None:
        sim.log(self.id, self.state, new, detail)
        self.state = new

    # transitions triggered by other agents -------------------------------

    def mark_checked(self, sim: "Simulation") -> None:
        self.checked = True
        self.milestones["checked"] = sim.tick
        self._to(sim, "checked")
        self._after_check(sim)

    def begin_offload(self, sim: "Simulation") -> None:
        if self.state == "awaiting_offload":
            self.milestones["offl_start"] = sim.tick
            self._to(sim, "offloading")

    def finish_offload(self, sim: "Simulation") -> None:
        self.milestones["offl_end"] = sim.tick
        self._after_offload(sim)

    def steps_delivered(self, sim: "Simulation") -> None:
        self.steps_present = True
        self.milestones["ps_ready"] = sim.tick
        sim.log(self.id, self.state, self.state, {"paxsteps": "delivered"})
        if self.state == "checked":
            self._after_check(sim)

    def steps_taken(self, sim: "Simulation") -> None:
        self.steps_present = False
        self.milestones["ps_removed"] = sim.tick
        self._taxi_out(sim)

    # internal ------------------------------------------------------------

    def _after_offload(self, sim: "Simulation") -> None:
        if self.pax > 0:
            self.busy_until = sim.tick + sim.cfg.gap_ticks
            self._to(sim, "gap_before_boarding")
        else:
            self.milestones["board_start"] = self.milestones["board_end"] = sim.tick
            self._after_boarding(sim)

    def _after_boarding(self, sim: "Simulation") -> None:
        if self.large_civ:
            self._to(sim, "awaiting_paxsteps_removal")
        else:
            self.milestones["ps_removed"] = sim.tick
            self._taxi_out(sim)

    def _taxi_out(self, sim: "Simulation") -> None:
        sim.parking.release(self.id)
        self.busy_until = sim.tick + sim.taxi_ticks(self.spot, sim.layout.exit)
        self._to(sim, "taxiing_out", {"from": self.spot})

    def _known(self) -> bool:
        return self.announced or not self.civilian

    def step(self, sim: "Simulation") -> None:
        st = self.state
        if st == "taxiing_in":
            if self.spot is None:
                spot = sim.request_parking(self)
                if spot is not None:
                    self.spot = spot
                    self.busy_until = sim.tick + sim.taxi_ticks(sim.layout.entry, spot)
                    sim.log(self.id, st, st, {"spot": spot})
            elif sim.tick >= self.busy_until:
                self.milestones["parked"] = sim.tick
                self._to(sim, "parked", {"spot": self.spot})
                if not self.civilian:
                    sim.milcoord.notify_parked(self, sim)
                if self._known():
                    self.checked = True
                    self.milestones["checked"] = sim.tick
                    self._to(sim, "checked")
                    self._after_check(sim)
        elif st == "gap_before_boarding":
            if sim.tick >= self.busy_until:
                self.milestones["board_start"] = sim.tick
                rate = sim.cfg.params.board_civ if self.civilian else sim.cfg.params.board_mil
                self.busy_until = sim.tick + boarding_duration(self.pax, rate)
                self._to(sim, "boarding")
        elif st == "boarding":
            if sim.tick >= self.busy_until:
                self.milestones["board_end"] = sim.tick
                self._after_boarding(sim)
        elif st == "taxiing_out":
            if sim.tick >= self.busy_until:
                self.milestones["exit"] = sim.tick
                self._to(sim, "departed")
                self.timeline = AircraftTimeline.from_milestones(self.milestones)
                sim.on_departure(self)

    def _after_check(self, sim: "Simulation") -> None:
        if self.has_cargo:
            self._to(sim, "awaiting_offload")
            return
        # nothing to offload: crew still needs the steps before boarding
        if self.large_civ and not self.steps_present:
            return
        self.milestones["offl_start"] = self.milestones["offl_end"] = sim.tick
        self._after_offload(sim)

    def timed(self) -> bool:
        return self.state in ("gap_before_boarding", "boarding", "taxiing_out") or (
            self.state == "taxiing_in" and self.spot is not None)


# ---------------------------------------------------------------- tasks and jobs

@dataclass
class TaskOrder:
    kind: str  # supply_paxsteps | retrieve_paxsteps | offload_large | offload_small | offload_military
    aircraft_id: str
    issued_tick: int
    cargo_kind: Optional[str] = None
    gse_id: Optional[str] = None
    driver_ids: tuple[str, ...] = ()
    handler_id: Optional[str] = None
    done_tick: Optional[int] = None
    est_end: Optional[int] = None


@dataclass
class OffloadJob:
    aircraft: Aircraft
    kind: str
    order: TaskOrder
    gse: Optional[str] = None
    dock: list = field(default_factory=list)
    handler_present: bool = False
    done: bool = False
    start_tick: Optional[int] = None
    end_tick: Optional[int] = None
    n_drivers: int = 1

    def can_lift(self) -> bool:
        ac = self.aircraft
        return (ac.state in ("awaiting_offload", "offloading")
                and (ac.steps_present or not ac.large_civ)
                and ac.remaining(self.kind) > 0)


@dataclass
class MilitaryJob:
    aircraft: Aircraft
    order: TaskOrder
    hl_id: Optional[str]
    tug_id: str
    ledger_slots: tuple[int, int]
    tug_at_aircraft: bool = False
    handler_present: bool = False
    started: bool = False


# ---------------------------------------------------------------- personnel

class Personnel:
    role = "personnel"

    def __init__(self, id: str, home: str, walk_kmh: float, drive_kmh: float = 30.0):
        self.id = id
        self.home = home
        self.node = home
        self.walk_kmh = walk_kmh
        self.drive_kmh = drive_kmh
        self.state = "idle"
        self.busy_until = 0
        self.task: Optional[TaskOrder] = None
        self.dest: Optional[str] = None

    def _to(self, sim: "Simulation", new: str, detail=None) -> None:
        sim.log(self.id, self.state, new, detail)
        self.state = new

    def _move(self, sim: "Simulation", state: str, dest: str, driving: bool) -> None:
        speed = self.drive_kmh if driving else self.walk_kmh
        self.busy_until = sim.tick + sim.travel(self.node, dest, speed)
        self.dest = dest
        self._to(sim, state, {"to": dest})

    def _arrive(self) -> None:
        self.node = self.dest

    @property
    def in_transit(self) -> bool:
        return self.state.startswith(("walk", "drive", "haul"))

    @property
    def idle(self) -> bool:
        return self.state == "idle"

    def step(self, sim: "Simulation") -> None:
        if sim.tick < self.busy_until:
            return
        getattr(self, "_on_" + self.state)(sim)

    def _on_idle(self, sim: "Simulation") -> None:
        pass

    def _finish_task(self, sim: "Simulation") -> None:
        self.task.done_tick = sim.tick
        sim.task_done(self, self.task)
        self.task = None
        self.job = None
        self._to(sim, "idle")


class Handler(Personnel):
    """Civilian handling agent operating a highloader or belt loader."""

    role = "handler"

    def __init__(self, id: str, home: str, walk_kmh: float = 5.0, drive_kmh: float = 30.0):
        super().__init__(id, home, walk_kmh, drive_kmh)
        self.job: Optional[OffloadJob | MilitaryJob] = None
        self.reserved_for: Optional[str] = None
        self.lifting: Optional[CargoItem] = None

    def assign(self, order: TaskOrder, job, sim: "Simulation") -> None:
        assert self.idle, f"{self.id} busy"
        self.task, self.job = order, job
        if order.kind == "offload_military":
            self.reserved_for = None
        self._move(sim, "walk_to_gse", sim.gse_home, driving=False)

    def _on_walk_to_gse(self, sim: "Simulation") -> None:
        self._arrive()
        gse = self.task.gse_id
        sim.fleet[gse].current_node = "moving"
        self._move(sim, "drive_to_aircraft", self.job.aircraft.spot, driving=True)

    def _on_drive_to_aircraft(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.task.gse_id].current_node = self.node
        self.job.handler_present = True
        if isinstance(self.job, MilitaryJob):
            self._to(sim, "mil_wait")
            sim.military_try_start(self.job)
        else:
            # offloading is under way once the loader is being positioned at the door
            self.job.aircraft.begin_offload(sim)
            self.busy_until = sim.tick + sim.cfg.loader_setup_ticks
            self._to(sim, "positioning")

    def _on_positioning(self, sim: "Simulation") -> None:
        self._to(sim, "wait_at_aircraft")
        self._try_lift(sim)

    def _on_wait_at_aircraft(self, sim: "Simulation") -> None:
        self._try_lift(sim)

    def _on_mil_wait(self, sim: "Simulation") -> None:
        pass  # the tug arrival starts the timer

    def _on_mil_offloading(self, sim: "Simulation") -> None:
        sim.military_finish(self.job)
        self._drive_home(sim)

    def _try_lift(self, sim: "Simulation") -> None:
        job = self.job
        if not job.dock or not job.can_lift():
            return
        ac = job.aircraft
        item = ac.cargo[job.kind].pop()
        transfer_cargo(item, (AIRCRAFT, ac.id), (GSE, self.task.gse_id))
        self.lifting = item
        if job.start_tick is None:
            job.start_tick = sim.tick
        ac.begin_offload(sim)
        self.busy_until = sim.tick + unit_transfer_ticks(item.weight, loading_rate(job.kind, sim.cfg.params))
        self._to(sim, "loading", {"item": item.id})

    def _on_loading(self, sim: "Simulation") -> None:
        job = self.job
        ac = job.aircraft
        driver = job.dock[0]
        transfer_cargo(self.lifting, (GSE, self.task.gse_id), (DOLLY, driver.task_tug))
        driver.load.append(self.lifting)
        self.lifting = None
        exhausted = ac.remaining(job.kind) == 0
        if exhausted or len(driver.load) >= sim.cfg.dolly_capacity[job.kind]:
            job.dock.pop(0)
            driver.depart_haul(sim)
        if exhausted:
            job.done = True
            job.end_tick = sim.tick
            sim.record_offload(job)
            for d in list(job.dock):
                d.go_home_from_aircraft(sim)
            job.dock.clear()
            if ac.remaining() == 0 and ac.state == "offloading":
                ac.finish_offload(sim)
            self._drive_home(sim)
            return
        self._to(sim, "wait_at_aircraft")
        self._try_lift(sim)

    def _drive_home(self, sim: "Simulation") -> None:
        sim.fleet[self.task.gse_id].current_node = "moving"
        self._move(sim, "drive_home", sim.gse_home, driving=True)

    def _on_drive_home(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.task.gse_id].current_node = self.node
        sim.set_gse(self.task.gse_id, PARKED)
        self._move(sim, "walk_to_office", sim.office, driving=False)

    def _on_walk_to_office(self, sim: "Simulation") -> None:
        self._arrive()
        self._finish_task(sim)
        sim.on_handler_idle(self)


class Driver(Personnel):
    role = "driver"

    def __init__(self, id: str, home: str, walk_kmh: float = 5.0, drive_kmh: float = 30.0):
        super().__init__(id, home, walk_kmh, drive_kmh)
        self.job: Optional[OffloadJob] = None
        self.task_tug: Optional[str] = None
        self.load: list[CargoItem] = []

    def assign(self, order: TaskOrder, job, sim: "Simulation", tug: Optional[str] = None) -> None:
        assert self.idle, f"{self.id} busy"
        self.task, self.job, self.task_tug = order, job, tug
        if order.kind == "retrieve_paxsteps":
            ac = sim.aircraft[order.aircraft_id]
            self._move(sim, "walk_to_aircraft", ac.spot, driving=False)
        else:
            self._move(sim, "walk_to_gse", sim.gse_home, driving=False)

    @property
    def vehicle(self) -> str:
        return self.task.gse_id if self.task.kind.endswith("paxsteps") else self.task_tug

    def _on_walk_to_gse(self, sim: "Simulation") -> None:
        self._arrive()
        ac = sim.aircraft[self.task.aircraft_id]
        sim.fleet[self.vehicle].current_node = "moving"
        self._move(sim, "drive_to_aircraft", ac.spot, driving=True)

    def _on_drive_to_aircraft(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.vehicle].current_node = self.node
        ac = sim.aircraft[self.task.aircraft_id]
        kind = self.task.kind
        if kind == "supply_paxsteps":
            ac.steps_delivered(sim)
            self._move(sim, "walk_to_office", sim.office, driving=False)
        elif kind == "offload_small":
            self._to(sim, "self_loading_wait")
            self._try_self_load(sim)
        else:
            self._dock(sim)

    def _dock(self, sim: "Simulation") -> None:
        job = self.job
        if job.done:
            self.go_home_from_aircraft(sim)
            return
        job.dock.append(self)
        self._to(sim, "docked")
        handler = sim.handler_by_id[job.order.handler_id]
        if handler.state == "wait_at_aircraft" and handler.node == self.node:
            handler._try_lift(sim)

    def _on_docked(self, sim: "Simulation") -> None:
        pass

    # small aircraft: the driver loads by itself
    def _on_self_loading_wait(self, sim: "Simulation") -> None:
        self._try_self_load(sim)

    def _try_self_load(self, sim: "Simulation") -> None:
        job = self.job
        ac = job.aircraft
        if ac.state not in ("awaiting_offload", "offloading") or ac.remaining(ICU) == 0:
            return
        item = ac.cargo[ICU].pop()
        transfer_cargo(item, (AIRCRAFT, ac.id), (DOLLY, self.task_tug))
        if job.start_tick is None:
            job.start_tick = sim.tick
        ac.begin_offload(sim)
        self.load.append(item)
        self.busy_until = sim.tick + unit_transfer_ticks(item.weight, sim.cfg.params.icu_general)
        self._to(sim, "self_loading", {"item": item.id})

    def _on_self_loading(self, sim: "Simulation") -> None:
        job = self.job
        ac = job.aircraft
        if ac.remaining(ICU) == 0:
            job.done = True
            job.end_tick = sim.tick
            sim.record_offload(job)
            ac.finish_offload(sim)
            self.depart_haul(sim)
        elif len(self.load) >= sim.cfg.dolly_capacity[ICU]:
            self.depart_haul(sim)
        else:
            self._to(sim, "self_loading_wait")
            self._try_self_load(sim)

    def depart_haul(self, sim: "Simulation") -> None:
        sim.fleet[self.task_tug].current_node = "moving"
        self._move(sim, "haul_to_drop_off", sim.drop_civ, driving=True)

    def _on_haul_to_drop_off(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.task_tug].current_node = self.node
        self._to(sim, "unloading")
        self._unload_next(sim)

    def _unload_next(self, sim: "Simulation") -> None:
        item = self.load[-1]
        rate = terminal_rate(item.kind, sim.cfg.params)
        self.busy_until = sim.tick + unit_transfer_ticks(item.weight, rate)

    def _on_unloading(self, sim: "Simulation") -> None:
        item = self.load.pop()
        transfer_cargo(item, (DOLLY, self.task_tug), (DROP_OFF, "civilian"))
        sim.delivered += 1
        if self.load:
            self._unload_next(sim)
            return
        job = self.job
        if job.done:
            self._drive_tug_home(sim)
        else:
            sim.fleet[self.task_tug].current_node = "moving"
            self._move(sim, "drive_back_to_aircraft", job.aircraft.spot, driving=True)

    def _on_drive_back_to_aircraft(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.task_tug].current_node = self.node
        if self.task.kind == "offload_small":
            self._to(sim, "self_loading_wait")
            self._try_self_load(sim)
        else:
            self._dock(sim)

    def go_home_from_aircraft(self, sim: "Simulation") -> None:
        self._drive_tug_home(sim)

    def _drive_tug_home(self, sim: "Simulation") -> None:
        sim.fleet[self.task_tug].current_node = "moving"
        self._move(sim, "drive_home", sim.gse_home, driving=True)

    def _on_drive_home(self, sim: "Simulation") -> None:
        self._arrive()
        sim.fleet[self.vehicle].current_node = self.node
        sim.set_gse(self.vehicle, PARKED)
        self._move(sim, "walk_to_office", sim.office, driving=False)

    # pax steps retrieval
    def _on_walk_to_aircraft(self, sim: "Simulation") -> None:
        self._arrive()
        ac = sim.aircraft[self.task.aircraft_id]
        sim.fleet[self.vehicle].current_node = "moving"
        ac.steps_taken(sim)
        self._move(sim, "drive_home", sim.gse_home, driving=True)

    def _on_walk_to_office(self, sim: "Simulation") -> None:
        self._arrive()
        self.task_tug = None
        self._finish_task(sim)


# ---------------------------------------------------------------- military side

@dataclass
class AtcCall:
    aircraft_id: str
    arrival_tick: int
    cargo: dict[str, float]
    pax: int

    @property
    def needs_highloader(self) -> bool:
        return self.cargo.get(PALLET, 0) > 0


@dataclass
class MilitaryRequest:
    kind: str  # "reserve_highloader" | "offload"
    aircraft_id: str
    requester: "Personnel"
    cargo: dict[str, float]
    granted: bool = False


class AtcAgent(Personnel):
    """Walks each incoming military call over to MOVCON; a second, unmodelled
    operator keeps taking calls while this one is away."""

    role = "atc"

    def __init__(self, id: str, home: str, walk_kmh: float = 6.0):
        super().__init__(id, home, walk_kmh)
        self.inbox: list[AtcCall] = []
        self.carrying: Optional[AtcCall] = None
        self.relayed: list[tuple[int, str]] = []

    def receive(self, call: AtcCall, sim: "Simulation") -> None:
        self.inbox.append(call)
        sim.log(self.id, self.state, self.state, {"call": call.aircraft_id})

    def _on_idle(self, sim: "Simulation") -> None:
        if self.inbox:
            self.carrying = self.inbox.pop(0)
            self._move(sim, "walk_to_movcon", sim.movcon_post, driving=False)

    def _on_walk_to_movcon(self, sim: "Simulation") -> None:
        self._arrive()
        sim.movcon.receive(self.carrying, sim)
        self.relayed.append((sim.tick, self.carrying.aircraft_id))
        self.carrying = None
        self._move(sim, "walk_back", self.home, driving=False)

    def _on_walk_back(self, sim: "Simulation") -> None:
        self._arrive()
        self._to(sim, "idle")
        self._on_idle(sim)


class _OfficeVisitor(Personnel):
    """Shared behaviour for MOVCON and the military offloading coordinator."""

    def __init__(self, id: str, home: str, walk_kmh: float = 6.0):
        super().__init__(id, home, walk_kmh)
        self.inbox: list = []
        self.request: Optional[MilitaryRequest] = None

    def _make_request(self, sim: "Simulation") -> Optional[MilitaryRequest]:
        raise NotImplementedError

    def _on_idle(self, sim: "Simulation") -> None:
        while self.inbox and self.request is None:
            self.request = self._make_request(sim)
        if self.request is not None:
            self._move(sim, "walk_to_office", sim.office, driving=False)

    def _on_walk_to_office(self, sim: "Simulation") -> None:
        self._arrive()
        self._to(sim, "waiting_at_office")
        sim.oc.military_requests.append(self.request)

    def _on_waiting_at_office(self, sim: "Simulation") -> None:
        if self.request.granted:
            self.request = None
            self._move(sim, "walk_back", self.home, driving=False)

    def _on_walk_back(self, sim: "Simulation") -> None:
        self._arrive()
        self._to(sim, "idle")
        self._on_idle(sim)


class MovconAgent(_OfficeVisitor):
    role = "movcon"

    def receive(self, call: AtcCall, sim: "Simulation") -> None:
        self.inbox.append(call)
        sim.log(self.id, self.state, self.state, {"info": call.aircraft_id})

    def _make_request(self, sim: "Simulation") -> Optional[MilitaryRequest]:
        call = self.inbox.pop(0)
        if not call.needs_highloader:
            return None
        return MilitaryRequest("reserve_highloader", call.aircraft_id, self, call.cargo)


class MilitaryCoordinator(_OfficeVisitor):
    role = "mil_coordinator"

    def notify_parked(self, ac: Aircraft, sim: "Simulation") -> None:
        self.inbox.append(ac)

    def _make_request(self, sim: "Simulation") -> Optional[MilitaryRequest]:
        ac = self.inbox.pop(0)
        return MilitaryRequest("offload", ac.id, self, dict(ac.manifest))


def build_cargo(ac: Aircraft, next_id: int) -> list[CargoItem]:
    items = []
    for kind in sorted(ac.manifest):
        stack = []
        for w in split_into_units(kind, ac.manifest[kind]):
            stack.append(CargoItem(next_id, kind, w, (AIRCRAFT, ac.id)))
            next_id += 1
        # units leave the hold in id order
        ac.cargo[kind] = stack[::-1]
        items.extend(stack)
    return items


__all__ = [
    "CIV_LARGE", "CIV_SMALL", "MIL_LARGE", "INTERVALS", "Aircraft", "AircraftTimeline", "TaskOrder",
    "OffloadJob", "MilitaryJob", "Handler", "Driver", "AtcAgent", "MovconAgent",
    "MilitaryCoordinator", "AtcCall", "MilitaryRequest", "offload_duration_large",
    "offload_duration_small", "offload_duration_military", "boarding_duration", "build_cargo",
    "TICK_SECONDS", "IN_USE",
]

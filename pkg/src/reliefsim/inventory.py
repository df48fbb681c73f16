"""Cargo objects, ground support equipment and the military resource ledger."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

ULD = "ULD_LD3"
PALLET = "PALLET_463L"
ICU = "ICU"
CARGO_KINDS = (ULD, PALLET, ICU)
UNIT_WEIGHT = {ULD: 1600.0, PALLET: 4500.0, ICU: 500.0}

PAX_STEPS = "pax_steps"
TUG = "tug_dollies"
BELT_LOADER = "belt_loader"
HIGHLOADER = "highloader"
GSE_KINDS = (PAX_STEPS, TUG, BELT_LOADER, HIGHLOADER)

PARKED, IN_USE, RESERVED = "parked", "in_use", "reserved"
_ALLOWED = {(PARKED, IN_USE), (IN_USE, PARKED), (PARKED, RESERVED), (RESERVED, PARKED),
            (RESERVED, IN_USE)}

# location tags
AIRCRAFT, GSE, DOLLY, DROP_OFF = "aircraft", "gse", "dolly", "drop_off"
_LEGAL_MOVES = {(AIRCRAFT, GSE), (GSE, DOLLY), (DOLLY, DROP_OFF), (AIRCRAFT, DOLLY)}

Location = tuple[str, str]


class ReservationUnavailable(RuntimeError):
    pass


class InvalidTransfer(ValueError):
    pass


class InvalidGseTransition(ValueError):
    pass


@dataclass
class CargoItem:
    id: int
    kind: str
    weight: float
    location: Location

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValueError("cargo unit weight must be positive")


def split_into_units(kind: str, total_kg: float) -> list[float]:
    """Full units of the nominal weight plus one partial unit for any remainder."""
    unit = UNIT_WEIGHT[kind]
    full, rest = divmod(total_kg, unit)
    weights = [unit] * int(full)
    if rest > 1e-9:
        weights.append(rest)
    return weights


def transfer_cargo(item: CargoItem, src: Location, dst: Location) -> CargoItem:
    if item.location != src:
        raise InvalidTransfer(f"item {item.id} is at {item.location}, not {src}")
    if (src[0], dst[0]) not in _LEGAL_MOVES:
        raise InvalidTransfer(f"cannot move cargo {src[0]} -> {dst[0]}")
    item.location = dst
    return item


@dataclass
class GseUnit:
    id: str
    kind: str
    home_node: str
    state: str = PARKED
    military_capable: bool = False
    current_node: str = ""
    reserved_by: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.current_node:
            self.current_node = self.home_node

    def set_state(self, new: str) -> None:
        if (self.state, new) not in _ALLOWED:
            raise InvalidGseTransition(f"{self.id}: {self.state} -> {new}")
        self.state = new
        if new == PARKED:
            self.reserved_by = None


@dataclass
class GseFleet:
    units: dict[str, GseUnit] = field(default_factory=dict)

    @classmethod
    def build(cls, counts: dict[str, int], home_node: str) -> "GseFleet":
        prefix = {PAX_STEPS: "PS", TUG: "T", BELT_LOADER: "BL", HIGHLOADER: "HL"}
        units = {}
        for kind in GSE_KINDS:
            for i in range(1, counts.get(kind, 0) + 1):
                uid = f"{prefix[kind]}{i}"
                units[uid] = GseUnit(uid, kind, home_node)
        hls = [u for u in units.values() if u.kind == HIGHLOADER]
        if hls:
            # the adapted highloader is the one with the highest model number
            max(hls, key=lambda u: int(u.id[2:])).military_capable = True
        return cls(units)

    def of_kind(self, kind: str) -> list[GseUnit]:
        return [u for u in self.units.values() if u.kind == kind]

    def __getitem__(self, uid: str) -> GseUnit:
        return self.units[uid]


def reserve_gse(unit_id: str, fleet: GseFleet, holder: str = "military") -> GseFleet:
    unit = fleet[unit_id]
    if unit.state != PARKED:
        raise ReservationUnavailable(f"{unit_id} is {unit.state}")
    unit.set_state(RESERVED)
    unit.reserved_by = holder
    return fleet


def free_gse_of_kind(kind: str, fleet: GseFleet, for_military: bool = False,
                     holder: Optional[str] = None) -> list[str]:
    """Parked units of `kind` usable by the requester, non-adapted units first.

    Reserved units are only visible to a military requester holding the
    reservation; a military highloader query only sees the adapted unit.
    """
    out = []
    for u in fleet.of_kind(kind):
        if for_military and kind == HIGHLOADER and not u.military_capable:
            continue
        if u.state == PARKED:
            out.append(u)
        elif u.state == RESERVED and for_military and holder is not None and u.reserved_by == holder:
            out.append(u)
    # a unit already held by the requester comes first, the adapted highloader last
    out.sort(key=lambda u: (u.state != RESERVED, u.military_capable, u.id))
    return [u.id for u in out]


LedgerEntry = Union[int, str]


class MilitaryResourceLedger:
    """Military handling agents and forklifts, tracked as 0 / busy ticks / 'reserved'."""

    def __init__(self, n_handlers: int = 2, n_forklifts: int = 2):
        self.handling_agents: list[LedgerEntry] = [0] * n_handlers
        self.forklifts: list[LedgerEntry] = [0] * n_forklifts

    def _lists(self):
        return (self.handling_agents, self.forklifts)

    def can_reserve(self) -> bool:
        return all(0 in lst for lst in self._lists())

    def reserve(self) -> tuple[int, int]:
        if not self.can_reserve():
            raise ReservationUnavailable("no free military handling agent/forklift")
        idx = []
        for lst in self._lists():
            i = lst.index(0)
            lst[i] = "reserved"
            idx.append(i)
        return idx[0], idx[1]

    def start_timer(self, slots: tuple[int, int], ticks: int) -> None:
        for lst, i in zip(self._lists(), slots):
            if lst[i] != "reserved":
                raise ValueError(f"ledger slot {i} not reserved: {lst[i]!r}")
            lst[i] = max(int(ticks), 0)

    def advance(self, n: int = 1) -> None:
        for lst in self._lists():
            for i, v in enumerate(lst):
                if isinstance(v, int) and v > 0:
                    lst[i] = max(v - n, 0)

    def busy_total(self) -> int:
        return sum(v for lst in self._lists() for v in lst if isinstance(v, int))

    def busy_count(self) -> int:
        return sum(1 for lst in self._lists() for v in lst if isinstance(v, int) and v > 0)

    def next_expiry(self) -> Optional[int]:
        left = [v for lst in self._lists() for v in lst if isinstance(v, int) and v > 0]
        return min(left) if left else None

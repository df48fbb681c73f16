"""Run configuration: calibrated rate presets, fleet composition, behaviour knobs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .inventory import BELT_LOADER, HIGHLOADER, ICU, PAX_STEPS, TUG, ULD


@dataclass(frozen=True)
class ParameterSet:
    """Handling rates. Offload rates in kg/s, boarding rates in s/pax."""

    uld_ac_gse: float
    uld_gse_tb: float
    icu_general: float
    p463l_ac_gse: float
    board_civ: float
    board_mil: float
    t_bb_gap_min: float = 12.0
    name: str = "custom"

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and v <= 0:
                raise ValueError(f"{f.name} must be positive, got {v}")


PRESETS = {
    "C0": ParameterSet(7.1, 45.0, 5.0, 7.5, 60.0, 30.0, name="C0"),
    # C0 plus the 463L rate and both boarding rates recalibrated
    "C3": ParameterSet(7.1, 45.0, 5.0, 10.0, 47.0, 22.5, name="C3"),
    "C6": ParameterSet(5.7, 40.0, 4.5, 10.0, 47.0, 22.5, name="C6"),
}


def preset(name: str) -> ParameterSet:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_parameter_file(path: str | Path) -> ParameterSet:
    """Read a flat ``key = value`` preset file whose keys are ParameterSet fields."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    names = {f.name for f in dataclasses.fields(ParameterSet)}
    unknown = set(doc) - names
    if unknown:
        raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
    base = dataclasses.asdict(preset(doc.get("name", "C6"))) if doc.get("name", "C6").upper() in PRESETS else {}
    base.update(doc)
    return ParameterSet(**base)


@dataclass(frozen=True)
class FleetConfig:
    highloaders: int = 2
    belt_loaders: int = 2
    pax_steps: int = 3
    tugs: int = 4
    drivers: int = 4
    handlers: int = 2
    mil_handling_agents: int = 2
    forklifts: int = 2

    def gse_counts(self) -> dict[str, int]:
        return {HIGHLOADER: self.highloaders, BELT_LOADER: self.belt_loaders,
                PAX_STEPS: self.pax_steps, TUG: self.tugs}


@dataclass(frozen=True)
class SimConfig:
    params: ParameterSet = PRESETS["C6"]
    fleet: FleetConfig = FleetConfig()
    strategy: int = 1
    # units per tug trip
    dolly_capacity: dict = field(default_factory=lambda: {ULD: 4, ICU: 4})
    taxi_speed_kmh: float = 30.0
    drive_speed_kmh: float = 30.0
    walk_civ_kmh: float = 5.0
    walk_mil_kmh: float = 6.0
    loader_setup_ticks: int = 24
    available_drivers: int = 2  # strategy 1 crew size per cargo type
    check_ticks: int = 156  # large civilian aircraft
    check_ticks_small: int = 12
    atc_call_lead_ticks: int = 180
    max_checks_per_round: int = 3
    max_start_ticks: int = 360
    objective: str = "finish_time"
    use_priority: bool = False
    horizon_ticks: int = 17280
    record_events: bool = True
    layout_path: Optional[str] = None  # None: bundled default layout

    def __post_init__(self) -> None:
        if self.strategy not in (1, 2):
            raise ValueError(f"strategy must be 1 or 2, got {self.strategy}")
        if self.available_drivers not in (1, 2):
            raise ValueError(f"available_drivers must be 1 or 2, got {self.available_drivers}")
        if self.objective not in ("finish_time", "offload_time"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def gap_ticks(self) -> int:
        return round(self.params.t_bb_gap_min * 12)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def config_from_dict(doc: dict) -> SimConfig:
    doc = dict(doc)
    if "params" in doc and isinstance(doc["params"], dict):
        doc["params"] = ParameterSet(**doc["params"])
    if "fleet" in doc and isinstance(doc["fleet"], dict):
        doc["fleet"] = FleetConfig(**doc["fleet"])
    return SimConfig(**doc)

"""Whole-simulation properties, quantified over 10 seeds x 10 schedules."""

import pytest

from reliefsim.agents import CIV_LARGE, CIV_SMALL, MIL_LARGE, INTERVALS
from reliefsim.config import SimConfig
from reliefsim.engine import Simulation
from reliefsim.experiment import case_config
from reliefsim.inventory import ICU, RESERVED, free_gse_of_kind
from reliefsim.metrics import REPORT_METRICS, decompose_timeline
from reliefsim.scenario import FlightEntry, generate_schedules, parse_case, prepare

SEEDS = range(10)
PER_SEED = 10
CIVIL_ORDERS = ("supply_paxsteps", "retrieve_paxsteps", "offload_large", "offload_small")


@pytest.fixture(scope="module")
def corpus():
    return [s for seed in SEEDS for s in generate_schedules(PER_SEED, 1000 + seed)]


def simulate(schedule, case, **kw):
    spec = parse_case(case)
    sim = Simulation(case_config(SimConfig(), spec, True), prepare(schedule, spec).entries, **kw)
    return sim, sim.run()


# -- per-tick invariants ------------------------------------------------------------------------

def tick_invariants(sim):
    fleet = sim.fleet
    for unit in fleet.units.values():
        if unit.state == RESERVED:
            assert unit.reserved_by is not None
            assert unit.id not in free_gse_of_kind(unit.kind, fleet), (sim.tick, unit.id)
        order = sim.gse_order.get(unit.id)
        if order is not None and order.kind in CIVIL_ORDERS:
            assert unit.reserved_by is None, (sim.tick, unit.id, order)
    spots = [ac.spot for ac in sim._ground if ac.spot is not None and ac.state != "taxiing_out"]
    assert len(spots) == len(set(spots)), sim.tick
    timers = [v for v in sim.ledger.handling_agents + sim.ledger.forklifts if isinstance(v, int)]
    assert min(timers, default=0) >= 0


def watch_paxsteps_priority(sim, violations):
    """Record any office decision that skipped a serviceable pax-steps request."""
    oc = sim.oc
    inner = oc._on_at_office

    def wrapped(s):
        pending = bool(oc._paxsteps_requests(s, serviceable_only=True))
        before = len(s.events)
        inner(s)
        if pending:
            first = next((e[4] for e in s.events[before:] if e[1] == oc.id and isinstance(e[4], dict)
                          and ("dispatch" in e[4] or "granted" in e[4])), None)
            if first is None or first.get("dispatch") not in ("supply_paxsteps", "retrieve_paxsteps"):
                violations.append((s.tick, first))

    oc._on_at_office = wrapped


def after_run_checks(sim, out):
    office = sim.office
    for ac in out.aircraft:
        assert ac.state == "departed", ac.id
        tl = ac.timeline
        assert sum(getattr(tl, k) for k in INTERVALS) == ac.milestones["exit"] - ac.arrival_tick
        d = decompose_timeline(ac)
        assert sum(d[k] for k in REPORT_METRICS if k != "TAT") == pytest.approx(d["TAT"])
        m = ac.milestones
        if ac.cls == CIV_LARGE and ac.pax > 0:
            assert m["ps_ready"] <= m["board_start"] and m["board_end"] <= m["ps_removed"] <= m["exit"]
        if ac.cls == MIL_LARGE:
            tug = next(e[0] for e in out.events if isinstance(e[4], dict) and e[4].get("arrived") == ac.id)
            assert tug <= m["offl_start"]
            if ac.has_cargo:
                present = [e[0] for e in out.events if e[3] == "mil_wait" and e[0] <= m["offl_start"]]
                assert present, ac.id
    for p in (*sim.handlers, *sim.drivers):
        assert p.idle and p.node == office, p.id
    assert sim.oc.at_office


@pytest.mark.parametrize("case", ["1A", "1B", "2A", "2Cu1"])
def test_invariants_hold_every_tick(corpus, case):
    for schedule in corpus:
        violations = []
        sim = Simulation(case_config(SimConfig(), parse_case(case), True),
                         prepare(schedule, parse_case(case)).entries,
                         check_every_tick=True, tick_hook=tick_invariants)
        watch_paxsteps_priority(sim, violations)
        out = sim.run()
        assert violations == [], (schedule.schedule_id, violations[:3])
        after_run_checks(sim, out)


# -- skip-ahead is an optimisation only -----------------------------------------------------------

@pytest.mark.parametrize("case", ["1A", "2B"])
def test_skip_ahead_matches_naive_loop(corpus, case):
    for schedule in corpus:
        _, fast = simulate(schedule, case)
        _, slow = simulate(schedule, case, skip=False)
        assert fast.events == slow.events
        assert [a.milestones for a in fast.aircraft] == [a.milestones for a in slow.aircraft]
        assert fast.oc_idle_ticks == slow.oc_idle_ticks
        assert fast.processed_ticks <= slow.processed_ticks


# -- coordinator behaviour ---------------------------------------------------------------------

@pytest.mark.parametrize("case", ["1A", "1B", "1Cu1", "1Cu7"])
def test_strategy_one_dispatches_chronologically(corpus, case):
    for schedule in corpus:
        sim, out = simulate(schedule, case)
        arrival = {a.id: (a.arrival_tick, a.id) for a in out.aircraft}
        keys = [arrival[aid] for _, aid in out.dispatch_order]
        assert keys == sorted(keys), schedule.schedule_id
        civil_with_cargo = {a.id for a in out.aircraft if a.civilian and a.has_cargo}
        assert {aid for _, aid in out.dispatch_order} == civil_with_cargo


@pytest.mark.parametrize("case", ["1B", "2B"])
def test_scenario_b_never_checks(corpus, case):
    for schedule in corpus:
        _, out = simulate(schedule, case)
        assert out.oc_excursions == 0 and out.oc_checks == 0
        assert all(a.timeline.t_bc == 0 for a in out.aircraft)


def test_unannounced_aircraft_are_checked(corpus):
    for schedule in corpus[:20]:
        _, a = simulate(schedule, "1A")
        _, c = simulate(schedule, "1Cu1")
        assert a.oc_excursions > c.oc_excursions >= 1
        assert a.oc_checks == sum(1 for x in a.aircraft if x.civilian)


def test_oc_idles_more_when_everything_is_announced(corpus):
    for schedule in corpus:
        _, a = simulate(schedule, "1A")
        _, b = simulate(schedule, "1B")
        assert b.oc_idle_ticks >= a.oc_idle_ticks, schedule.schedule_id


# -- hand-built traffic ------------------------------------------------------------------------

def small(i, tick, kg=1000.0, announced=False):
    return FlightEntry(f"S{i:02d}", CIV_SMALL, tick, {ICU: kg} if kg else {}, 4, announced)


def test_check_round_covers_three_cargo_aircraft():
    flights = [small(i, 100) for i in range(4)]
    sim = Simulation(SimConfig(), flights)
    out = sim.run()
    assert out.oc_checks == 4 and out.oc_excursions == 2
    checked = sorted(a.milestones["checked"] for a in out.aircraft)
    assert checked[2] < checked[3]


def test_saturated_tarmac_queues_and_drains():
    # more simultaneous arrivals than stands of both kinds
    flights = [small(i, 50, announced=True) for i in range(14)]
    occupancy = []
    sim = Simulation(SimConfig(), flights, tick_hook=lambda s: occupancy.append(
        sum(1 for a in s._ground if a.spot is not None and a.state != "taxiing_out")))
    out = sim.run()
    assert max(occupancy) == len(sim.layout.parking_nodes())
    assert all(a.state == "departed" for a in out.aircraft)
    waited = [a for a in out.aircraft if a.timeline.t_bp > 30]
    assert waited


def test_empty_small_aircraft_skips_offload_and_boarding():
    sim = Simulation(SimConfig(), [FlightEntry("S00", CIV_SMALL, 10, {}, 0, True)])
    (ac,) = sim.run().aircraft
    tl = ac.timeline
    assert tl.t_offl == tl.t_bb == tl.t_board == tl.t_bo == 0

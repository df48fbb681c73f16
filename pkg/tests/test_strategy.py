import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliefsim.inventory import ICU, ULD
from reliefsim.strategy import (ALL, BEST, BELT_LOADER, DRIVER, HANDLER, HIGHLOADER, LATE_PENALTY, MAX,
                                MIN, DurationTable, PlanAircraft, PlannerError, build_est_rss,
                                generate_best_option, ra_ahead, ra_available, rss_update, score_options,
                                strategy1_allocate)

TPM = 12
TABLE = DurationTable()
# the offloading table, minutes for (1 driver, 2 drivers)
RAW = {ULD: {15000: (52, 46), 18000: (61, 54), 20000: (70, 61)},
       ICU: {5000: (35, 21), 6000: (37, 25), 8000: (54, 33)}}
KIND_OF = {"H": HANDLER, "HL": HIGHLOADER, "BL": BELT_LOADER, "D": DRIVER}


def est_of(now, **pools):
    """est_of(0, H=[0], HL=[0, 50], D=[0, 0]) -> EstRss"""
    entries = []
    for prefix, times in pools.items():
        for i, t in enumerate(times, 1):
            # idle resources are passed as None
            entries.append((f"{prefix}{i}", KIND_OF[prefix], None if t <= now else t))
    return build_est_rss(entries, now)


def aircraft(cargo, ready=0, max_start=10**6, id="A"):
    return PlanAircraft(id, dict(cargo), ready, max_start)


# -- worked examples ---------------------------------------------------------------------

def test_table_rows_and_dominance():
    for kind, rows in RAW.items():
        for kg, (one, two) in rows.items():
            assert TABLE.minutes(kind, kg, 1) == one
            assert TABLE.minutes(kind, kg, 2) == two
            assert two < one
    with pytest.raises(ValueError):
        DurationTable({ULD: {15000: (40, 45)}})


def test_off_grid_amount_interpolates():
    assert TABLE.minutes(ULD, 16500, 1) == pytest.approx(56.5)


def test_ra_available_one_handler_starts_long_pole_with_two_drivers():
    est = est_of(0, H=[0], HL=[0], BL=[0], D=[0, 0])
    opt = ra_available(est, aircraft({ULD: 15000, ICU: 5000}), 0, TABLE)
    assert [(k, n) for k, n, _ in opt.assign] == [(ULD, 2)]
    assert opt.ama == {HANDLER: 1, HIGHLOADER: 1, BELT_LOADER: 0, DRIVER: 2}
    assert opt.est_uld == 46 * TPM and opt.est_icu == 0 and opt.start_step == 0


def test_ra_available_uld_only_one_driver():
    est = est_of(100, H=[100], HL=[100], D=[100])
    opt = ra_available(est, aircraft({ULD: 18000}), 100, TABLE)
    assert opt.est_uld == 100 + 61 * TPM
    assert opt.est_icu == 100 == opt.start_step


def test_ra_available_without_drivers_is_absent():
    est = est_of(0, H=[0], HL=[0], BL=[0], D=[40])
    assert ra_available(est, aircraft({ULD: 15000}), 0, TABLE) is None
    assert strategy1_allocate(est, aircraft({ULD: 15000}), 0, TABLE) is None


def test_ra_ahead_max_all_free():
    est = est_of(0, H=[0], BL=[0], D=[0, 0])
    opt = ra_ahead(est, aircraft({ICU: 5000}), ICU, MAX, 0, TABLE)
    assert opt.start_step == 0 and opt.est_icu == 21 * TPM


def test_ra_ahead_best_waits_for_second_driver():
    est = est_of(0, H=[0], BL=[0], D=[0, 10 * TPM])
    opt = ra_ahead(est, aircraft({ICU: 5000}), ICU, BEST, 0, TABLE)
    assert opt.start_step == 10 * TPM
    assert opt.est_icu == 31 * TPM  # 10 + 21 beats 0 + 35


def test_ra_ahead_min_now_and_missing_cargo():
    est = est_of(0, H=[0], HL=[0], D=[0])
    assert ra_ahead(est, aircraft({ULD: 15000}), ULD, MIN, 0, TABLE).start_step == 0
    empty = ra_ahead(est, aircraft({ULD: 15000}), ICU, MIN, 0, TABLE)
    assert empty.assign == () and empty.est_icu == empty.start_step == 0


def test_ra_ahead_fleet_too_small():
    est = est_of(0, H=[0], HL=[0], D=[0])
    assert ra_ahead(est, aircraft({ULD: 15000}), ULD, MAX, 0, TABLE) is None


def test_rss_update_sets_finish_and_rejects_infeasible():
    est = est_of(0, H=[0], BL=[0], D=[0])
    opt = ra_ahead(est, aircraft({ICU: 5000}), ICU, MIN, 0, TABLE)
    out = rss_update(est, opt)
    assert out["D1"] == (DRIVER, 35 * TPM) and out["H1"][1] == 35 * TPM
    assert rss_update(est, None) == est
    busy = est_of(0, H=[50], BL=[0], D=[0])
    with pytest.raises(PlannerError):
        rss_update(busy, opt)


def test_planner_prefers_waiting_for_two_drivers():
    est = est_of(0, H=[0], BL=[0], D=[0, 10 * TPM])
    opt = generate_best_option(est, aircraft({ICU: 5000}), None, 0, TABLE)
    assert opt.start_step == 10 * TPM and opt.est_icu == 31 * TPM


def test_planner_single_aircraft_all_free_equals_available():
    est = est_of(0, H=[0, 0], HL=[0], BL=[0], D=[0, 0, 0, 0])
    a = aircraft({ULD: 20000, ICU: 8000})
    best = generate_best_option(est, a, None, 0, TABLE)
    avail = ra_available(est, a, 0, TABLE)
    assert (best.est_uld, best.est_icu, best.start_step) == (avail.est_uld, avail.est_icu, avail.start_step)


def test_late_start_penalised():
    # only option for A starts after its max start
    est = est_of(0, H=[0], BL=[0], D=[100])
    a = aircraft({ICU: 5000}, max_start=50)
    scored = score_options(est, a, None, 0, TABLE)
    assert scored and all(s.score >= LATE_PENALTY for s in scored)


def test_unpenalised_option_wins():
    # one driver now is on time; waiting for the second is late but would finish earlier
    est = est_of(0, H=[0], BL=[0], D=[0, 60])
    a = aircraft({ICU: 8000}, max_start=30)
    opt = generate_best_option(est, a, None, 0, TABLE)
    assert opt.start_step == 0


# -- exhaustive oracle over the candidate combinations -----------------------------------

def _o_ticks(kind, kg, n):
    return round(RAW[kind][int(kg)][n - 1] * TPM)


def _o_kinds(cargo, selector):
    return [k for k in (ULD, ICU) if selector in (k, ALL) and cargo.get(k, 0) > 0]


def _o_need(kinds, n):
    need = {}
    for k in kinds:
        for r, c in ((HANDLER, 1), (HIGHLOADER if k == ULD else BELT_LOADER, 1), (DRIVER, n)):
            need[r] = need.get(r, 0) + c
    return need


def _o_ahead(est, ac, selector, n, now):
    """Scan candidate ticks upward until the needed counts are all free."""
    start = max(now, ac.ready)
    kinds = _o_kinds(ac.cargo, selector)
    ends = {ULD: start, ICU: start}
    if not kinds:
        return start, ends, []
    need = _o_need(kinds, n)
    if any(sum(1 for kk, _ in est.values() if kk == r) < c for r, c in need.items()):
        return None
    ticks = sorted({start} | {t for _, t in est.values() if t > start})
    for t in ticks:
        if all(sum(1 for kk, ft in est.values() if kk == r and ft <= t) >= c for r, c in need.items()):
            break
    ends = {ULD: t, ICU: t}
    uses = []
    order = sorted(est, key=lambda rid: (est[rid][1], rid))
    pools = {r: [rid for rid in order if est[rid][0] == r] for r in need}
    for k in kinds:
        ends[k] = t + _o_ticks(k, ac.cargo[k], n)
        loader = HIGHLOADER if k == ULD else BELT_LOADER
        ids = [pools[HANDLER].pop(0), pools[loader].pop(0)] + [pools[DRIVER].pop(0) for _ in range(n)]
        uses.append((ids, ends[k]))
    return t, ends, uses


def _o_available(est, ac, now):
    if now < ac.ready:
        return None
    idle = sorted((rid for rid in est if est[rid][1] <= now), key=lambda rid: (est[rid][1], rid))
    free = {r: [rid for rid in idle if est[rid][0] == r] for r in (HANDLER, HIGHLOADER, BELT_LOADER, DRIVER)}
    kinds = sorted(_o_kinds(ac.cargo, ALL), key=lambda k: (-RAW[k][int(ac.cargo[k])][0], k))
    ends = {ULD: now, ICU: now}
    uses = []
    for k in kinds:
        loader = HIGHLOADER if k == ULD else BELT_LOADER
        if free[HANDLER] and free[loader] and free[DRIVER]:
            n = min(2, len(free[DRIVER]))
            ends[k] = now + _o_ticks(k, ac.cargo[k], n)
            ids = [free[HANDLER].pop(0), free[loader].pop(0)] + [free[DRIVER].pop(0) for _ in range(n)]
            uses.append((ids, ends[k]))
    if not uses:
        return None
    return now, ends, uses


def _o_apply(est, uses):
    out = dict(est)
    for ids, end in uses:
        for rid in ids:
            out[rid] = (out[rid][0], end)
    return out


def _o_best(est, ac, selector, now):
    cands = []
    for n in (1, 2):
        r = _o_ahead(est, ac, selector, n, now)
        if r is not None:
            cands.append((max(r[1].values()), sum(len(ids) for ids, _ in r[2]), r))
    return min(cands, key=lambda c: (c[0], c[1]))[2] if cands else None


def oracle_plan(est, a, b, now):
    """(score, A latest end, enumeration index, A start, A ends) minimum over the combinations."""
    tmin = _o_ahead(est, a, ALL, 1, now)
    if tmin is None or tmin[0] > now:
        combos = [((lambda f=f, n=n: _o_ahead(est, a, f, n, now)), a, o)
                  for f, o in ((ULD, ICU), (ICU, ULD)) if a.cargo.get(f, 0) > 0 for n in (1, 2)]
    else:
        combos = [(lambda: tmin, b, ALL), (lambda: _o_ahead(est, a, ALL, 2, now), b, ALL),
                  (lambda: _o_available(est, a, now), b, ALL)]
    rows = []
    for i, (make, ac_b, sel) in enumerate(combos):
        ra = make()
        if ra is None:
            continue
        latest_a = max(ra[1].values())
        score = latest_a
        if ac_b is not None:
            rb = _o_best(_o_apply(est, ra[2]), ac_b, sel, now)
            if rb is not None:
                score = max(score, max(rb[1].values()))
        if ra[0] > a.max_start:
            score += LATE_PENALTY
        rows.append((score, latest_a, i, ra[0], ra[1]))
    return min(rows) if rows else None


def random_state(rng):
    now = int(rng.integers(0, 2000))

    def times(n):
        return [now if rng.random() < 0.5 else now + int(rng.integers(1, 90 * TPM)) for _ in range(n)]

    est = est_of(now, H=times(rng.integers(1, 4)), HL=times(rng.integers(1, 3)),
                 BL=times(rng.integers(1, 3)), D=times(rng.integers(1, 6)))

    def plane(id):
        cargo = {}
        while not cargo:
            if rng.random() < 0.7:
                cargo[ULD] = float(rng.choice([15000, 18000, 20000]))
            if rng.random() < 0.7:
                cargo[ICU] = float(rng.choice([5000, 6000, 8000]))
        ready = now if rng.random() < 0.7 else now + int(rng.integers(1, 30 * TPM))
        max_start = ready + int(rng.integers(0, 60 * TPM))
        return aircraft(cargo, ready, max_start, id)

    return est, plane("A"), (plane("B") if rng.random() < 0.8 else None), now


def test_planner_matches_exhaustive_oracle():
    rng = np.random.default_rng(20240601)
    checked = 0
    for _ in range(10_000):
        est, a, b, now = random_state(rng)
        got = generate_best_option(est, a, b, now, TABLE)
        want = oracle_plan(est, a, b, now)
        if want is None:
            assert got is None
            continue
        scores = {s.option_a: s.score for s in score_options(est, a, b, now, TABLE)}
        assert scores[got] == want[0]
        assert (got.start_step, got.est_uld, got.est_icu) == (want[3], want[4][ULD], want[4][ICU])
        checked += 1
    assert checked > 9000


# -- properties ------------------------------------------------------------------------------

@st.composite
def states(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(np.random.default_rng(seed))


@given(states())
@settings(max_examples=300, deadline=None)
def test_option_invariants(state):
    est, a, b, now = state
    for opt in (s.option_a for s in score_options(est, a, b, now, TABLE)):
        assert opt.start_step >= now
        for k in a.kinds():
            if any(kind == k for kind, _, _ in opt.assign):
                assert opt.est_for(k) >= opt.start_step
        ama = opt.ama
        assert ama[HANDLER] <= len(a.kinds())
        assert all(n in (1, 2) for _, n, _ in opt.assign)


@given(states())
@settings(max_examples=300, deadline=None)
def test_max_mode_never_slower_than_min(state):
    est, a, _, now = state
    for sel in (ULD, ICU, ALL):
        lo = ra_ahead(est, a, sel, MIN, now, TABLE)
        hi = ra_ahead(est, a, sel, MAX, now, TABLE)
        if lo is not None and hi is not None and lo.start_step == hi.start_step:
            assert hi.est_uld <= lo.est_uld and hi.est_icu <= lo.est_icu


@given(states())
@settings(max_examples=300, deadline=None)
def test_strategy1_starts_when_minimum_set_idle(state):
    est, a, _, now = state
    a = PlanAircraft(a.id, a.cargo, now, a.max_start)
    idle = {r: sum(1 for k, t in est.values() if k == r and t <= now)
            for r in (HANDLER, HIGHLOADER, BELT_LOADER, DRIVER)}
    loader = {ULD: HIGHLOADER, ICU: BELT_LOADER}
    if any(idle[HANDLER] and idle[loader[k]] and idle[DRIVER] for k in a.kinds()):
        assert ra_available(est, a, now, TABLE) is not None


@given(states(), states())
@settings(max_examples=200, deadline=None)
def test_disjoint_updates_commute(s1, s2):
    est, a, _, now = s1
    o1 = ra_ahead(est, a, ULD, MIN, now, TABLE)
    o2 = ra_ahead(est, a, ICU, MIN, now, TABLE)
    if o1 is None or o2 is None or not o1.assign or not o2.assign:
        return
    ids1 = {r for _, _, ids in o1.assign for r in ids}
    ids2 = {r for _, _, ids in o2.assign for r in ids}
    if ids1 & ids2:
        return
    assert rss_update(rss_update(est, o1), o2) == rss_update(rss_update(est, o2), o1)


def test_overlapping_updates_conflict():
    est = est_of(0, H=[0], BL=[0], D=[0])
    o1 = ra_ahead(est, aircraft({ICU: 5000}), ICU, MIN, 0, TABLE)
    o2 = ra_ahead(est, aircraft({ICU: 8000}), ICU, MIN, 0, TABLE)
    with pytest.raises(PlannerError):
        rss_update(rss_update(est, o1), o2)


def _scope(est, a, b, now):
    """Which combinations are scored and whether B counts in them."""
    tmin = ra_ahead(est, a, ALL, MIN, now, TABLE)
    b_fits = b is not None and ra_ahead(est, b, ALL, BEST, now, TABLE) is not None
    return tmin is not None and tmin.start_step <= now, b_fits


@given(states(), st.sampled_from([HANDLER, HIGHLOADER, BELT_LOADER, DRIVER]))
@settings(max_examples=500, deadline=None)
def test_extra_free_resource_never_delays_plan(state, kind):
    # compared within one combination set; see the example below for a switch
    est, a, b, now = state
    more = dict(est)
    more["X99"] = (kind, now)
    before = score_options(est, a, b, now, TABLE)
    after = score_options(more, a, b, now, TABLE)
    if before and _scope(est, a, b, now) == _scope(more, a, b, now):
        assert min(s.score for s in after) <= min(s.score for s in before)


def test_freeing_a_handler_brings_b_into_the_score():
    # with one idle handler A is planned cargo by cargo and B is ignored;
    # a second idle handler switches to whole-aircraft plans scored with B
    est = est_of(444, H=[444, 1422], HL=[833, 444], BL=[674, 444], D=[444, 444])
    a = aircraft({ULD: 18000, ICU: 6000}, 444, 826)
    b = aircraft({ULD: 18000, ICU: 5000}, 594, 1081, id="B")
    before = min(s.score for s in score_options(est, a, b, 444, TABLE))
    more = dict(est, X99=(HANDLER, 444))
    after = min(s.score for s in score_options(more, a, b, 444, TABLE))
    assert not _scope(est, a, b, 444)[0] and _scope(more, a, b, 444)[0]
    assert after > before


def test_b_that_fits_the_fleet_again_counts():
    # one driver in total: B cannot be planned and only A is scored
    est = est_of(991, H=[991, 1406], HL=[991, 991], BL=[1738], D=[991])
    a = aircraft({ULD: 20000}, 991, 1184)
    b = aircraft({ULD: 20000, ICU: 8000}, 1265, 1530, id="B")
    before = min(s.score for s in score_options(est, a, b, 991, TABLE))
    more = dict(est, X99=(DRIVER, 991))
    after = min(s.score for s in score_options(more, a, b, 991, TABLE))
    assert not _scope(est, a, b, 991)[1] and _scope(more, a, b, 991)[1]
    assert before == 1831 and after == 2578

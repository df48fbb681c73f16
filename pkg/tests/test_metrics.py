import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliefsim.agents import CIV_LARGE, MIL_LARGE, INTERVALS, Aircraft, AircraftTimeline
from reliefsim.metrics import (COMPARE_METRICS, REPORT_METRICS, AircraftRecord, CorpusMismatch,
                               IncompleteAircraft, aggregate, aggregate_csv, cliffs_delta, compare_cases,
                               decompose_timeline, magnitude, records_csv, records_from_csv,
                               records_from_run)


def pairwise_delta(xs, ys):
    """Direct O(n*m) count over every pair."""
    gt = sum(1 for x, y in itertools.product(xs, ys) if x > y)
    lt = sum(1 for x, y in itertools.product(xs, ys) if x < y)
    return (gt - lt) / (len(xs) * len(ys))


def record(tat, offl=50.0, sid=0, aid="L1", cls=CIV_LARGE, complete=True, cargo=True, pax=30):
    minutes = {m: 0.0 for m in REPORT_METRICS}
    minutes.update(TAT=tat, T_Offl=offl, T_Board=tat - offl)
    return AircraftRecord(sid, aid, cls, cargo, pax, 0, complete, minutes if complete else {})


# -- Cliff's delta -----------------------------------------------------------------------

def test_delta_examples():
    assert cliffs_delta([1, 2, 3], [1, 2, 3]) == (0.0, "negligible")
    assert cliffs_delta([1, 2, 3], [4, 5, 6]) == (-1.0, "large")
    assert cliffs_delta([1, 3], [2]) == (0.0, "negligible")


def test_delta_empty_sample():
    with pytest.raises(ValueError):
        cliffs_delta([], [1.0])
    with pytest.raises(ValueError):
        cliffs_delta([1.0], [])


@pytest.mark.parametrize("d,name", [(0.0, "negligible"), (0.1469, "negligible"), (0.147, "small"),
                                    (-0.32, "small"), (0.33, "medium"), (0.4739, "medium"),
                                    (0.474, "large"), (-1.0, "large")])
def test_magnitude_thresholds(d, name):
    assert magnitude(d) == name


samples = st.lists(st.integers(-50, 50).map(float), min_size=1, max_size=40)


@given(samples, samples)
@settings(max_examples=300)
def test_delta_matches_pairwise_count(xs, ys):
    assert cliffs_delta(xs, ys)[0] == pytest.approx(pairwise_delta(xs, ys), abs=1e-12)


def _random_pairs(n):
    rng = np.random.default_rng(11)
    for _ in range(n):
        nx, ny = rng.integers(1, 60, size=2)
        # rounding creates ties, which the transformation has to keep
        yield np.round(rng.normal(0, 3, nx), 1), np.round(rng.normal(rng.normal(), 3, ny), 1)


def test_delta_antisymmetric_on_1000_pairs():
    for xs, ys in _random_pairs(1000):
        assert cliffs_delta(xs, ys)[0] == -cliffs_delta(ys, xs)[0]


MONOTONE = [lambda v: np.exp(v / 5), lambda v: v ** 3 + v, lambda v: 2.5 * v - 7, np.arctan]


def test_delta_invariant_under_monotone_maps_on_1000_pairs():
    for i, (xs, ys) in enumerate(_random_pairs(1000)):
        f = MONOTONE[i % len(MONOTONE)]
        assert cliffs_delta(f(xs), f(ys))[0] == cliffs_delta(xs, ys)[0]


@given(samples, samples)
@settings(max_examples=200)
def test_delta_bounds_and_antisymmetry(xs, ys):
    d = cliffs_delta(xs, ys)[0]
    assert -1.0 <= d <= 1.0
    assert cliffs_delta(ys, xs)[0] == -d


# -- timeline decomposition ---------------------------------------------------------------

def departed(milestones, pax=30, cargo=True):
    ac = Aircraft("L1", CIV_LARGE, milestones["arrival"], {"ULD_LD3": 15000} if cargo else {}, pax)
    ac.timeline = AircraftTimeline.from_milestones(milestones)
    return ac


def test_decomposition_sums_to_tat():
    m = {"arrival": 0, "parked": 60, "ps_ready": 70, "checked": 226, "offl_start": 300,
         "offl_end": 1020, "board_start": 1164, "board_end": 1500, "ps_removed": 1550, "exit": 1560}
    d = decompose_timeline(departed(m))
    assert d["TAT"] == 130.0
    assert sum(d[k] for k in REPORT_METRICS if k != "TAT") == pytest.approx(130.0)
    assert d["T_BB"] == 12.0


def test_no_pax_means_no_boarding():
    m = {"arrival": 0, "parked": 60, "ps_ready": 70, "checked": 226, "offl_start": 300,
         "offl_end": 1020, "board_start": 1020, "board_end": 1020, "ps_removed": 1050, "exit": 1060}
    d = decompose_timeline(departed(m, pax=0))
    assert d["T_Board"] == 0 and d["T_BB"] == 0


def test_incomplete_aircraft():
    ac = Aircraft("L1", CIV_LARGE, 0, {}, 10)
    with pytest.raises(IncompleteAircraft):
        decompose_timeline(ac)
    (rec,) = records_from_run(3, [ac])
    assert not rec.complete and rec.minutes == {}


@given(st.lists(st.integers(0, 400), min_size=9, max_size=9), st.integers(0, 10_000))
def test_milestone_intervals_sum_to_span(gaps, arrival):
    keys = ["parked", "ps_ready", "checked", "offl_start", "offl_end", "board_start", "board_end",
            "ps_removed", "exit"]
    m = {"arrival": arrival}
    t = arrival
    for k, g in zip(keys, gaps):
        t += g
        m[k] = t
    tl = AircraftTimeline.from_milestones(m)
    assert tl.tat == m["exit"] - arrival
    assert all(getattr(tl, k) >= 0 for k in INTERVALS)


# -- aggregation and comparison ----------------------------------------------------------

def test_aggregate_pooled_mean_and_std():
    recs = [record(120.0, sid=0), record(130.0, sid=0, aid="L2"), record(140.0, sid=1),
            record(999.0, cls=MIL_LARGE), record(999.0, cargo=False), record(0, complete=False)]
    agg = aggregate(recs)
    assert agg.mean("TAT") == pytest.approx(130.0)
    assert agg.std("TAT") == pytest.approx(math.sqrt(200 / 3))
    assert agg.stats["TAT"].n == 3 and agg.n_incomplete == 1
    per_run = aggregate(recs, per_run=True)
    assert per_run.mean("TAT") == pytest.approx((125.0 + 140.0) / 2)


def test_aggregate_single_and_empty():
    assert aggregate([record(100.0)]).std("TAT") == 0.0
    assert aggregate([record(100.0)], "military").empty


def test_compare_rows_and_identity():
    a = [record(100.0 + i, aid=f"L{i}") for i in range(10)]
    rows = compare_cases(a, a)
    assert [r.metric for r in rows] == list(COMPARE_METRICS)
    assert all(r.delta == 0.0 for r in rows)


def test_compare_refuses_mismatched_corpora():
    a = [record(100.0)]
    with pytest.raises(CorpusMismatch):
        compare_cases(a, a, corpus_a="abc", corpus_b="def")
    compare_cases(a, a, corpus_a="abc", corpus_b="abc")


def test_records_csv_round_trip():
    recs = [record(120.25, sid=2), record(0, complete=False, aid="L9")]
    back = records_from_csv(records_csv(recs))
    assert back[0].minutes["TAT"] == 120.25 and back[0].schedule_id == 2
    assert not back[1].complete
    assert aggregate_csv(aggregate(recs)).splitlines()[0].startswith("metric,mean_min")

"""Print mean interval breakdowns for a set of cases on one corpus.

    python scripts/calibration_report.py --schedules 30 --seed 7 --cases 1A 1B 1Cu1 1Cu7
"""

import argparse
import time

from reliefsim.config import SimConfig
from reliefsim.experiment import run_case
from reliefsim.metrics import REPORT_METRICS, aggregate
from reliefsim.scenario import generate_schedules, parse_case


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--schedules", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--atif", type=float, default=1.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--cases", nargs="+", default=["1A", "1B", "1Cu1", "1Cu7", "2A", "2B", "2Cu1", "2Cu7"])
    args = ap.parse_args()

    schedules = generate_schedules(args.schedules, args.seed)
    cfg = SimConfig()
    cols = ("TAT",) + tuple(m for m in REPORT_METRICS if m != "TAT")
    print(f"{'case':6s} {'filter':10s} " + " ".join(f"{c:>7s}" for c in cols) + "   secs")
    for case in args.cases:
        t0 = time.perf_counter()
        res = run_case(schedules, parse_case(case, args.atif), cfg, jobs=args.jobs)
        secs = time.perf_counter() - t0
        for filt in ("civ_large_cargo_pax", "military"):
            agg = aggregate(res.records, filt)
            label = "civ" if filt.startswith("civ") else "mil"
            row = " ".join(f"{agg.mean(c):7.1f}" for c in cols)
            print(f"{case:6s} {label:10s} {row}   {secs:5.1f}")
        std = aggregate(res.records).std("TAT")
        excursions = sum(r.oc_excursions for r in res.runs)
        print(f"{'':6s} {'':10s} TAT std {std:.1f}, OC excursions {excursions}")


if __name__ == "__main__":
    main()

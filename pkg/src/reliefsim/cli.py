"""Command line entry point: corpus generation, case runs, comparisons and
estimate calibration.

    reliefsim generate --n 120 --seed 7 --out corpus.json
    reliefsim run --corpus corpus.json --strategy 1 --scenario A --out out
    reliefsim compare --a out/1A --b out/1B
    reliefsim calibrate-estimates --corpus corpus.json --out est.json
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import SimConfig, config_from_dict, load_parameter_file, preset
from .coordinator import Estimates, estimates_from_dict, load_estimates
from .experiment import calibrate_estimates, run_case
from .metrics import (CorpusMismatch, FILTERS, aggregate, aggregate_csv, compare_cases,
                      comparison_csv, records_csv, records_from_csv)
from .scenario import (GenParams, InvalidSpec, ScenarioSpec, composition, corpus_hash,
                       generate_schedules, load_corpus, parse_scenario, save_corpus)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MISMATCH = 0, 2, 3, 4
OUT_ENV = "RELIEFSIM_OUT"
MANIFEST = "manifest.json"
AGGREGATE = "aggregate.csv"
RECORDS = "records.csv"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "out"))


def _params(args) -> SimConfig:
    if args.params_file:
        params = load_parameter_file(args.params_file)
    else:
        params = preset(args.preset)
    layout = str(Path(args.layout).resolve()) if args.layout else None
    return replace(SimConfig(), params=params, record_events=True, layout_path=layout)


def _from_manifest(args):
    """Case, config and estimates exactly as recorded in a previous run."""
    m = json.loads(Path(args.manifest).read_text())
    args.corpus = args.corpus or m["corpus"]
    args.strategy, args.scenario, args.atif = m["strategy"], m["scenario"], m["atif"]
    args.filter, args.freeze_military = m["filter"], m["freeze_military"]
    args.limit = m["schedules"]
    cfg = config_from_dict(m["config"])
    if cfg.digest() != m["config_hash"]:
        raise ValueError(f"{args.manifest}: config does not match its recorded hash")
    return cfg, estimates_from_dict(m["estimates"]), m["corpus_hash"]


def _estimates(path: Optional[str]) -> Estimates:
    return load_estimates(path) if path else load_estimates()


# -- generate -----------------------------------------------------------------

def cmd_generate(args) -> int:
    gen = GenParams()
    schedules = generate_schedules(args.n, args.seed, gen)
    doc = save_corpus(args.out, schedules, args.seed, gen)
    summary = composition(schedules)
    print(f"wrote {args.out}: {args.n} schedules, corpus hash {corpus_hash(doc)}")
    for k, v in summary.items():
        print(f"  {k:22s} {v:.2f}" if isinstance(v, float) else f"  {k:22s} {v}")
    return EXIT_OK


# -- run --------------------------------------------------------------------------

def case_label(spec: ScenarioSpec) -> str:
    return spec.label


def cmd_run(args) -> int:
    expect_hash = None
    if args.manifest:
        cfg, estimates, expect_hash = _from_manifest(args)
    elif not args.corpus:
        raise ValueError("run needs --corpus or --manifest")
    else:
        cfg, estimates = _params(args), _estimates(args.estimates)
    schedules, doc = load_corpus(args.corpus)
    if expect_hash is not None and corpus_hash(doc) != expect_hash:
        raise CorpusMismatch(f"{args.corpus} is not the corpus recorded in {args.manifest}")
    if args.limit:
        schedules = schedules[:args.limit]
    spec = parse_scenario(args.scenario, args.strategy, args.atif)
    t0 = time.perf_counter()
    res = run_case(schedules, spec, cfg, estimates, jobs=args.jobs, keep_events=not args.no_events,
                   scale_military=not args.freeze_military)
    secs = time.perf_counter() - t0
    out = Path(args.out) / case_label(spec)
    for run in res.runs:
        if run.events_jsonl is not None:
            _write(out / f"run_{run.schedule_id:03d}.jsonl", run.events_jsonl)
    agg = aggregate(res.records, args.filter)
    _write(out / AGGREGATE, aggregate_csv(agg))
    _write(out / RECORDS, records_csv(res.records))
    manifest = {
        "case": case_label(spec),
        "strategy": spec.strategy,
        "scenario": spec.scenario_label,
        "atif": spec.atif,
        "freeze_military": bool(args.freeze_military),
        "filter": args.filter,
        "corpus": str(Path(args.corpus).resolve()),
        "corpus_hash": corpus_hash(doc),
        "corpus_seed": doc.get("seed"),
        "schedules": len(schedules),
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "estimates": estimates.to_dict(),
        "version": __version__,
    }
    _write(out / MANIFEST, _dumps(manifest))
    if agg.empty:
        print(f"{manifest['case']}: no complete aircraft match {args.filter}")
    else:
        print(f"{manifest['case']}: TAT {agg.mean('TAT'):.1f} +- {agg.std('TAT'):.1f} min, "
              f"offload {agg.mean('T_Offl'):.1f}, boarding {agg.mean('T_Board'):.1f} "
              f"(n={agg.stats['TAT'].n}, incomplete {agg.n_incomplete}, {secs:.1f} s) -> {out}")
    return EXIT_OK


def _load_result(d: Path):
    manifest = json.loads((d / MANIFEST).read_text())
    records = records_from_csv((d / RECORDS).read_text())
    return manifest, records


def cmd_compare(args) -> int:
    ma, ra = _load_result(Path(args.a))
    mb, rb = _load_result(Path(args.b))
    rows = compare_cases(ra, rb, filter=args.filter, corpus_a=ma["corpus_hash"], corpus_b=mb["corpus_hash"])
    text = comparison_csv(rows)
    if args.out:
        _write(Path(args.out), text)
    print(f"{ma['case']} vs {mb['case']}")
    for r in rows:
        print(f"  {r.metric:8s} {r.delta:+.3f} {r.magnitude}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    schedules, doc = load_corpus(args.corpus)
    spec = parse_scenario("A", 1)
    res = run_case(schedules, spec, _params(args), jobs=args.jobs)
    cal = calibrate_estimates(res.runs)
    out = cal.to_dict()
    out["corpus_hash"] = corpus_hash(doc)
    _write(Path(args.out), _dumps(out))
    print(f"wrote {args.out} from {len(schedules)} schedules of case 1A")
    if cal.low_n:
        print(f"  low-n cells (<5 samples): {', '.join(cal.low_n)}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reliefsim", description="Relief airport cargo handling simulation")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="generate a schedule corpus")
    g.add_argument("--n", type=int, default=120)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--out", default="corpus.json")
    g.set_defaults(func=cmd_generate)

    def sim_opts(p):
        p.add_argument("--preset", default="C6", help="rate preset: C0, C3 or C6")
        p.add_argument("--params-file", help="flat key = value parameter file")
        p.add_argument("--layout", help="layout JSON (default: bundled layout)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")

    r = sub.add_parser("run", help="run one case over a corpus")
    r.add_argument("--corpus", help="schedule corpus from generate")
    r.add_argument("--manifest", help="replay the case recorded in this manifest")
    r.add_argument("--strategy", type=int, choices=(1, 2), default=1)
    r.add_argument("--scenario", default="A", help="A, B, Cu1, Cu7 or Cu<n>")
    r.add_argument("--atif", default="1.0")
    r.add_argument("--out", default=None, help=f"output root (default ${OUT_ENV} or ./out)")
    r.add_argument("--estimates", help="estimate table from calibrate-estimates")
    r.add_argument("--filter", default="civ_large_cargo_pax", choices=sorted(FILTERS))
    r.add_argument("--freeze-military", action="store_true", help="do not scale military arrivals")
    r.add_argument("--no-events", action="store_true", help="skip per-run event logs")
    r.add_argument("--limit", type=int, default=0, help="only the first N schedules")
    sim_opts(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="Cliff's delta between two case results")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--out")
    c.add_argument("--filter", default="civ_large_cargo_pax", choices=sorted(FILTERS))
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("calibrate-estimates", help="task duration estimates from case 1A")
    e.add_argument("--corpus", required=True)
    e.add_argument("--out", default="estimates.json")
    sim_opts(e)
    e.set_defaults(func=cmd_calibrate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "out", "") is None:
        args.out = str(default_out())
    try:
        return args.func(args)
    except CorpusMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (InvalidSpec, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.strerror or exc} ({exc.filename})", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

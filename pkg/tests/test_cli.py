import json

import pytest

from reliefsim.cli import EXIT_IO, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, OUT_ENV, main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "corpus.json"
    assert main(["generate", "--n", "3", "--seed", "5", "--out", str(path)]) == EXIT_OK
    return path


def run(corpus, out, *extra):
    return main(["run", "--corpus", str(corpus), "--out", str(out), *extra])


def test_generate_is_byte_stable(corpus, tmp_path):
    again = tmp_path / "again.json"
    main(["generate", "--n", "3", "--seed", "5", "--out", str(again)])
    assert again.read_bytes() == corpus.read_bytes()


def test_run_writes_case_directory(corpus, tmp_path):
    assert run(corpus, tmp_path, "--scenario", "B", "--strategy", "2") == EXIT_OK
    case = tmp_path / "2B"
    assert sorted(p.name for p in case.iterdir()) == [
        "aggregate.csv", "manifest.json", "records.csv", "run_000.jsonl", "run_001.jsonl", "run_002.jsonl"]
    m = json.loads((case / "manifest.json").read_text())
    assert (m["case"], m["strategy"], m["scenario"], m["schedules"]) == ("2B", 2, "B", 3)
    first = json.loads((case / "run_000.jsonl").read_text().splitlines()[0])
    assert set(first) == {"tick", "agent", "from", "to", "detail"}


def test_manifest_replay_is_byte_identical(corpus, tmp_path):
    run(corpus, tmp_path / "a", "--scenario", "Cu1", "--atif", "0.8", "--no-events")
    src = tmp_path / "a" / "1Cu1_atif0.8"
    assert main(["run", "--manifest", str(src / "manifest.json"), "--out", str(tmp_path / "b"),
                 "--no-events"]) == EXIT_OK
    dst = tmp_path / "b" / "1Cu1_atif0.8"
    for name in ("aggregate.csv", "records.csv", "manifest.json"):
        assert (src / name).read_bytes() == (dst / name).read_bytes(), name


def test_compare_and_corpus_mismatch(corpus, tmp_path, capsys):
    run(corpus, tmp_path, "--no-events")
    run(corpus, tmp_path, "--scenario", "B", "--no-events")
    out_csv = tmp_path / "cmp.csv"
    assert main(["compare", "--a", str(tmp_path / "1A"), "--b", str(tmp_path / "1B"),
                 "--out", str(out_csv)]) == EXIT_OK
    assert out_csv.read_text().startswith("metric,")
    assert "1A vs 1B" in capsys.readouterr().out
    other = tmp_path / "other.json"
    main(["generate", "--n", "3", "--seed", "6", "--out", str(other)])
    run(other, tmp_path / "x", "--no-events")
    assert main(["compare", "--a", str(tmp_path / "1A"), "--b", str(tmp_path / "x" / "1A")]) == EXIT_MISMATCH
    assert main(["run", "--manifest", str(tmp_path / "1A" / "manifest.json"), "--corpus", str(other),
                 "--out", str(tmp_path / "y")]) == EXIT_MISMATCH


def test_exit_codes(corpus, tmp_path):
    assert main(["run", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run(corpus, tmp_path, "--scenario", "Cu9") == EXIT_USAGE
    assert run(corpus, tmp_path, "--preset", "C9") == EXIT_USAGE
    assert run(tmp_path / "missing.json", tmp_path) == EXIT_IO
    assert main(["compare", "--a", str(tmp_path / "nope"), "--b", str(tmp_path / "nope")]) == EXIT_IO
    assert main(["frobnicate"]) == EXIT_USAGE


def test_output_root_from_environment(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["run", "--corpus", str(corpus), "--limit", "1", "--no-events"]) == EXIT_OK
    assert (tmp_path / "env" / "1A" / "manifest.json").exists()


def test_calibrate_estimates(corpus, tmp_path):
    out = tmp_path / "est.json"
    assert main(["calibrate-estimates", "--corpus", str(corpus), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert {"task_ticks", "duration_table", "corpus_hash"} <= set(doc)
    assert run(corpus, tmp_path, "--estimates", str(out), "--limit", "1") == EXIT_OK

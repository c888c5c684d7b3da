import csv
import filecmp

import pytest

from precrash.cli import CONFIG_ENV, EXIT_CONFIG, EXIT_INPUT, bundled, load_config, main
from precrash.scenarios import classify_all, scenario_frequency_table


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _data_files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file()
                  and p.name != "run.log")


def test_classify_matches_library(tmp_path, corpus, reference_rules):
    out = tmp_path / "out"
    assert main(["classify", "--input", str(bundled("corpus.csv")), "--out", str(out)]) == 0
    rows = _read_csv(out / "assignments" / "assignments.csv")
    expected = classify_all(corpus, reference_rules)
    assert {r[0]: int(r[1]) for r in rows[1:]} == expected
    freq = _read_csv(out / "assignments" / "frequency.csv")
    table = scenario_frequency_table(expected)
    assert [(int(r[0]), int(r[2]), r[3]) for r in freq[1:]] == [
        (t.scenario, t.count, t.percentage_text) for t in table]


def test_mine_rejects_min_len_above_max_len(tmp_path, capsys):
    code = main(["mine", "--input", str(bundled("corpus.csv")), "--min-len", "7",
                 "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "min_len 7 exceeds max_len 6" in capsys.readouterr().err


def test_pipeline_on_empty_file(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "out"
    assert main(["pipeline", "--input", str(empty), "--out", str(out)]) == 0
    assert _read_csv(out / "assignments" / "assignments.csv") == [
        ["record_id", "scenario", "rule", "low_confidence"]]
    assert len(_read_csv(out / "rules" / "rules.csv")) == 1
    assert (out / "run.log").exists()


def test_pipeline_is_byte_identical(tmp_path):
    args = ["pipeline", "--input", str(bundled("raw_corpus.csv")),
            "--truth", str(bundled("ground_truth.csv")),
            "--chains", str(bundled("intersection_chains.jsonl"))]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    files = _data_files(a)
    assert files == _data_files(b)
    assert len(files) > 15
    _, mismatch, errors = filecmp.cmpfiles(a, b, [str(f) for f in files], shallow=False)
    assert mismatch == [] and errors == []


def test_config_file_and_flag_override(tmp_path, monkeypatch):
    cfg = tmp_path / "precrash.toml"
    cfg.write_text('[mining]\nmin_support = 0.05\nmax_len = 5\nuniverse = "20-24"\n'
                   '[paths]\nrules = "my_rules.txt"\n')
    config = load_config(cfg)
    assert (config.min_support, config.max_len, config.min_len) == (0.05, 5, 3)
    assert config.rules == str(tmp_path / "my_rules.txt")

    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    (tmp_path / "my_rules.txt").write_text("rule any scenario 24\n  weather present\nend\n")
    out = tmp_path / "out"
    code = main(["mine", "--input", str(bundled("corpus.csv")), "--min-support", "0.5",
                 "--out", str(out)])
    assert code == 0
    log = (out / "run.log").read_text()
    assert "--min-support 0.5" in log


@pytest.mark.parametrize("text, fragment", [
    ("[mining]\nmin_supprt = 0.1\n", "unknown key"),
    ("[colour]\nx = 1\n", "unknown section"),
    ("[mining]\nmin_support = 'high'\n", "unexpected value"),
    ("[mining]\nmin_len = 7\n", "exceeds"),
    ("[mining]\nfields = ['colour']\n", "unknown mining field"),
    ("[mining\n", "config"),
])
def test_bad_config(tmp_path, capsys, text, fragment):
    cfg = tmp_path / "c.toml"
    cfg.write_text(text)
    code = main(["classify", "--input", str(bundled("corpus.csv")), "--config", str(cfg),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert fragment in capsys.readouterr().err


def test_bad_rule_file_aborts(tmp_path, capsys):
    rules = tmp_path / "r.txt"
    rules.write_text("rule a scenario 24\n  crash_type == 99\nend\n")
    code = main(["classify", "--input", str(bundled("corpus.csv")), "--rules", str(rules),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    assert "r.txt:line 2" in capsys.readouterr().err


def test_malformed_header_aborts(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("record_id,weather\n1,1\n")
    code = main(["ingest", "--input", str(bad), "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    assert "malformed header" in capsys.readouterr().err


def test_validate_reports_rows(tmp_path, capsys):
    text = bundled("corpus.csv").read_text().splitlines()
    header = text[0].split(",")
    row = next(csv.reader([text[1]]))
    row[header.index("weather")] = "9"
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows([header, row])
    assert main(["validate", "--input", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "weather code out of range" in capsys.readouterr().out


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as info:
        main(["explode"])
    assert info.value.code != 0


def test_dream_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["dream", "--chains", str(bundled("intersection_chains.jsonl")),
                 "--out", str(out)]) == 0
    shares = {r[0]: r[3] for r in _read_csv(out / "dream" / "shares.csv")[1:]}
    assert shares["night"] == "2/3"
    assert shares["habitually-stretching-rules"] == "3/5"
    assert (out / "dream" / "graph.dot").read_text().startswith("digraph dream {")


def test_dream_needs_chains(tmp_path):
    assert main(["dream", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_evaluate_subcommand(tmp_path):
    out = tmp_path / "o"
    assert main(["evaluate", "--input", str(bundled("corpus.csv")),
                 "--truth", str(bundled("ground_truth.csv")), "--out", str(out)]) == 0
    metrics = dict(_read_csv(out / "reports" / "evaluation.csv")[1:])
    assert (metrics["far_percent"], metrics["mar_percent"], metrics["accuracy_percent"]) == (
        "1.86", "0.62", "98.14")


def test_taxonomy_extension(tmp_path):
    tax = tmp_path / "tax.toml"
    tax.write_text('[[term]]\nlabel = "fatigue"\nkind = "genotype"\n'
                   'category = "driver-permanent-personal"\n')
    chains = tmp_path / "c.jsonl"
    chains.write_text('{"crash_id": "x", "links": [["fatigue", "timing/no-action"]]}\n')
    out = tmp_path / "o"
    assert main(["dream", "--chains", str(chains), "--taxonomy", str(tax),
                 "--out", str(out)]) == 0
    assert main(["dream", "--chains", str(chains), "--out", str(out)]) == EXIT_INPUT

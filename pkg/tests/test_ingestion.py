import csv
import io

import pytest
from hypothesis import given, settings, HealthCheck

from precrash.data_model import FIELD_NAMES
from precrash.ingestion import (
    IngestError,
    RecordFile,
    annual_party_distribution,
    dumps_records,
    filter_for_analysis,
    parse_many,
    parse_records,
    party_shares,
)

from strategies import record_lists

TMP = settings(suppress_health_check=[HealthCheck.function_scoped_fixture])


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _csv_rows(records):
    return list(csv.reader(io.StringIO(dumps_records(records))))


def _rewrite(rows):
    buf = io.StringIO(newline="")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


@TMP
@given(record_lists(max_size=12))
def test_csv_round_trip(tmp_path, records):
    path = _write(tmp_path, "r.csv", dumps_records(records))
    result = parse_records(path)
    assert result.diagnostics == []
    assert result.records == records


@TMP
@given(record_lists(max_size=12))
def test_jsonl_round_trip(tmp_path, records):
    path = _write(tmp_path, "r.jsonl", dumps_records(records, "jsonl"))
    result = parse_records(path)
    assert result.diagnostics == []
    assert result.records == records


def test_three_valid_rows(tmp_path, corpus):
    path = _write(tmp_path, "three.csv", dumps_records(corpus[:3]))
    result = parse_records(path)
    assert (len(result.records), len(result.diagnostics)) == (3, 0)


def test_non_numeric_lighting(tmp_path, corpus):
    rows = _csv_rows(corpus[:3])
    rows[2][FIELD_NAMES.index("lighting")] = "dark"
    result = parse_records(_write(tmp_path, "bad.csv", _rewrite(rows)))
    assert [r.record_id for r in result.records] == [corpus[0].record_id, corpus[2].record_id]
    assert len(result.diagnostics) == 1
    assert result.diagnostics[0].row == 2
    assert result.diagnostics[0].cause == "lighting: not a code"


def test_invalid_code_is_reported_with_row(tmp_path, corpus):
    rows = _csv_rows(corpus[:2])
    rows[1][FIELD_NAMES.index("weather")] = "12"
    result = parse_records(_write(tmp_path, "bad.csv", _rewrite(rows)))
    assert len(result.records) == 1
    assert result.diagnostics[0].row == 1
    assert "weather code out of range" in result.diagnostics[0].cause


def test_duplicate_record_id(tmp_path, corpus):
    text = dumps_records([corpus[0], corpus[1], corpus[0]])
    result = parse_records(_write(tmp_path, "dup.csv", text))
    assert len(result.records) == 2
    assert "duplicate record_id" in result.diagnostics[0].cause


@pytest.mark.parametrize("mutate, message", [
    (lambda h: h[:-1], "missing column(s): damage_locations"),
    (lambda h: h + ["colour"], "unknown column(s): colour"),
    (lambda h: h[:-1] + ["weather"], "duplicate column(s): weather"),
])
def test_malformed_header_aborts(tmp_path, mutate, message):
    header = ",".join(mutate(list(FIELD_NAMES)))
    with pytest.raises(IngestError, match=message.replace("(", r"\(").replace(")", r"\)")):
        parse_records(_write(tmp_path, "h.csv", header + "\n"))


def test_unreadable_file(tmp_path):
    with pytest.raises(IngestError, match="cannot read"):
        parse_records(tmp_path / "missing.csv")


def test_empty_file_holds_no_records(tmp_path):
    result = parse_records(_write(tmp_path, "e.csv", ""))
    assert result.records == [] and result.diagnostics == []


def test_column_order_is_free(tmp_path, corpus):
    rows = _csv_rows(corpus[:5])
    order = list(reversed(range(len(FIELD_NAMES))))
    shuffled = [[row[i] for i in order] for row in rows]
    result = parse_records(_write(tmp_path, "rev.csv", _rewrite(shuffled)))
    assert result.records == corpus[:5]


def test_format_by_suffix(tmp_path):
    assert RecordFile.of(tmp_path / "a.jsonl").format == "jsonl"
    assert RecordFile.of(tmp_path / "a.ndjson").format == "jsonl"
    assert RecordFile.of(tmp_path / "a.csv").format == "csv"
    with pytest.raises(IngestError):
        RecordFile.of(tmp_path / "a.csv", "xml")


def test_parse_many_keeps_file_order(tmp_path, corpus):
    a = _write(tmp_path, "a.csv", dumps_records(corpus[:4]))
    b = _write(tmp_path, "b.jsonl", dumps_records(corpus[4:9], "jsonl"))
    for workers in (1, 3):
        merged = parse_many([a, b], workers=workers)
        assert merged.records == corpus[:9]


def test_bundled_corpus_parses_to_322(corpus):
    assert len(corpus) == 322


def test_filter_counts_first_failing_criterion(corpus):
    base = corpus[0]
    records = [base,
               base.replace(record_id="m", v1_mode=3),
               base.replace(record_id="v", involved_vehicles=1),
               base.replace(record_id="mv", v1_mode=2, involved_vehicles=3)]
    result = filter_for_analysis(records)
    assert [r.record_id for r in result.retained] == [base.record_id]
    assert result.removed == {"mode": 2, "vehicle count": 1}


@given(record_lists(max_size=25))
def test_filter_partitions(records):
    result = filter_for_analysis(records)
    assert len(result.retained) + result.n_removed == len(records)
    assert all(r.v1_mode == 1 and r.involved_vehicles == 2 for r in result.retained)


def test_raw_corpus_filters_to_322(raw_corpus, corpus):
    result = filter_for_analysis(raw_corpus)
    assert len(raw_corpus) == 615
    assert len(result.retained) == 322
    assert [r.record_id for r in result.retained] == [r.record_id for r in corpus]


def test_party_distribution(corpus):
    dist = annual_party_distribution(corpus)
    assert sum(sum(row.values()) for row in dist.values()) == 322
    shares = party_shares(dist, ["non-motorized", "object"])
    assert shares[2023] > 0.2
    assert all(share < 0.2 for year, share in shares.items() if year != 2023)

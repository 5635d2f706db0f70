import json

import pytest

from listrank.core import ValidationError
from listrank.trec import (
    InputError,
    build_candidates,
    cap_bytes,
    format_ledger,
    format_run,
    load_corpus,
    load_ledger,
    load_price_sheets,
    load_qrels,
    load_queries,
    load_run,
    usage_to_row,
)
from listrank.core import UsageRecord


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_run_is_sorted_by_rank(tmp_path):
    p = write(tmp_path, "r", "q1 Q0 b 2 5.0 x\nq1 Q0 a 1 9.0 x\nq2 Q0 c 1 1.0 x\n")
    run = load_run(p)
    assert list(run) == ["q1", "q2"]
    assert [e.doc_id for e in run["q1"]] == ["a", "b"]


@pytest.mark.parametrize("line,fragment", [
    ("q1 Q0 a 1 9.0", "6 columns"),
    ("q1 Q0 a one 9.0 x", "integer"),
])
def test_malformed_run_reports_line(tmp_path, line, fragment):
    p = write(tmp_path, "r", "q1 Q0 z 1 1.0 x\n" + line + "\n")
    with pytest.raises(InputError) as info:
        load_run(p)
    assert info.value.lineno == 2 and fragment in str(info.value)


def test_repeated_doc_in_run_rejected(tmp_path):
    p = write(tmp_path, "r", "q1 Q0 a 1 1 x\nq1 Q0 a 2 1 x\n")
    with pytest.raises(InputError):
        load_run(p)


def test_qrels(tmp_path):
    q = load_qrels(write(tmp_path, "q", "q1 0 a 2\nq1 0 b 0\n"))
    assert q.for_query("q1") == {"a": 2, "b": 0} and q.relevance("q1", "zz") == 0
    with pytest.raises(InputError):
        load_qrels(write(tmp_path, "bad", "q1 0 a -1\n"))


def test_corpus_queries_and_candidates(tmp_path):
    corpus = load_corpus(write(tmp_path, "c", json.dumps({"docid": "a", "contents": "héllo wörld"}) + "\n"))
    queries = load_queries(write(tmp_path, "t", "q1\twhat\n"))
    run = load_run(write(tmp_path, "r", "q1 Q0 a 1 1 x\n"))
    [cand] = build_candidates(run, corpus, queries)
    assert cand.doc_ids == ("a",) and cand.query.body == "what"
    bad_run = load_run(write(tmp_path, "r2", "q1 Q0 missing 1 1 x\n"))
    with pytest.raises(ValidationError, match="not in corpus"):
        build_candidates(bad_run, corpus, queries)


def test_bad_corpus_line(tmp_path):
    with pytest.raises(InputError) as info:
        load_corpus(write(tmp_path, "c", '{"docid": "a", "contents": "x"}\n{"id": 1}\n'))
    assert info.value.lineno == 2


def test_byte_cap_respects_characters():
    assert cap_bytes("héllo", 2) == "h"
    assert cap_bytes("abc", None) == "abc"


def test_run_writer_scores_descend():
    text = format_run([("q1", ["a", "b", "c"])], "t")
    assert text == "q1 Q0 a 1 3 t\nq1 Q0 b 2 2 t\nq1 Q0 c 3 1 t\n"


def test_ledger_round_trip(tmp_path):
    u = UsageRecord("q1", 10, 2, 0.5, (81, 100), 2)
    p = write(tmp_path, "l", format_ledger([usage_to_row(u, "sliding")]))
    assert load_ledger(p) == {"sliding": [u]}


def test_price_sheets(tmp_path):
    assert "gpt-4o-2024-08-06" in load_price_sheets()
    p = write(tmp_path, "p.json", '{"m": {"input_per_1k": 0.001, "output_per_1k": "0.002"}}')
    sheet = load_price_sheets(p)["m"]
    assert str(sheet.input_price_per_1k) == "0.001"

import json
import random

import pytest

from listrank.core import CandidateList, Passage, Query


def make_candidates(n, seed=0, body_chars=40, qid="q1"):
    """Candidates d0..d{n-1} plus distinct hidden scores drawn from ``seed``."""
    rng = random.Random(seed)
    passages = [Passage(f"d{i}", f"passage {i} " + "x" * body_chars) for i in range(n)]
    scores = {p.doc_id: rng.random() for p in passages}
    return CandidateList(Query(qid, f"query {qid}"), tuple(passages)), scores


def true_order(candidates, scores):
    """1-based positions sorted by descending hidden score, ties by position."""
    ids = candidates.doc_ids
    return sorted(range(1, len(ids) + 1), key=lambda i: (-scores[ids[i - 1]], i))


@pytest.fixture
def trec_files(tmp_path):
    """Three queries with 30 BM25-style candidates each, plus qrels."""
    rng = random.Random(7)
    corpus, queries, run, qrels = [], [], [], []
    for q in range(1, 4):
        qid = f"q{q}"
        queries.append(f"{qid}\twhat is topic {q}")
        for r in range(1, 31):
            doc = f"{qid}-d{r}"
            corpus.append(json.dumps({"docid": doc, "contents": f"text of {doc} " + "w " * 50}))
            run.append(f"{qid} Q0 {doc} {r} {100 - r + rng.random():.4f} bm25")
            if rng.random() < 0.3:
                qrels.append(f"{qid} 0 {doc} {rng.randint(0, 3)}")
    paths = {}
    for name, lines in (("corpus.jsonl", corpus), ("queries.tsv", queries),
                        ("run.trec", run), ("qrels.txt", qrels)):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths[name.split(".")[0]] = path
    return paths

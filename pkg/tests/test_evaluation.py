import itertools
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from listrank.core import Qrels, ValidationError
from listrank.evaluation import aggregate, evaluate_run, ndcg_at_k


def brute_force_ndcg(ranking, judged, k):
    """Ideal DCG found by trying every ordering of the judged documents."""
    def dcg(docs):
        return sum((2 ** judged.get(d, 0) - 1) / math.log2(i + 2) for i, d in enumerate(docs[:k]))

    best = max((dcg(list(p)) for p in itertools.permutations(judged)), default=0.0)
    return dcg(ranking) / best if best > 0 else 0.0


def test_single_relevant_at_top():
    assert ndcg_at_k(["d1", "d2"], {"d1": 1}, 10) == 1.0


def test_two_grade_example():
    judged = {"d1": 3, "d2": 1}
    value = ndcg_at_k(["d2", "d1"], judged, 10)
    dcg = 1 / 1 + 7 / math.log2(3)
    idcg = 7 + 1 / math.log2(3)
    assert dcg == pytest.approx(5.41650, abs=1e-5)
    assert idcg == pytest.approx(7.63093, abs=1e-5)
    assert value == pytest.approx(0.70981, abs=1e-5)
    assert value == pytest.approx(brute_force_ndcg(["d2", "d1"], judged, 10), abs=1e-12)


def test_ties_make_any_order_ideal():
    judged = {f"d{i}": 2 for i in range(5)}
    assert ndcg_at_k([f"d{i}" for i in reversed(range(5))], judged, 10) == pytest.approx(1.0)


def test_no_relevant_docs_is_zero_and_flagged():
    assert ndcg_at_k(["a"], {"a": 0}, 10) == 0.0
    scores = evaluate_run({"q": ["a"]}, Qrels({"q": {"a": 0}}), 10)
    assert scores[0].ndcg == 0.0 and not scores[0].has_relevant


def test_input_validation():
    with pytest.raises(ValidationError):
        ndcg_at_k([], {"a": 1}, 10)
    with pytest.raises(ValidationError):
        ndcg_at_k(["a"], {"a": 1}, 0)
    with pytest.raises(ValidationError):
        ndcg_at_k(["a", "a"], {"a": 1}, 10)


def test_unjudged_docs_count_as_zero():
    assert ndcg_at_k(["x", "d1"], {"d1": 1}, 10) == pytest.approx(1 / math.log2(3))


def test_idcg_uses_all_judged_docs_even_unretrieved():
    assert ndcg_at_k(["d1"], {"d1": 1, "d2": 1}, 10) == pytest.approx(1 / (1 + 1 / math.log2(3)))


def test_linear_gain_switch():
    v = ndcg_at_k(["d2", "d1"], {"d1": 3, "d2": 1}, 10, gain="linear")
    assert v == pytest.approx((1 + 3 / math.log2(3)) / (3 + 1 / math.log2(3)))


def test_random_instances_match_brute_force():
    rng = random.Random(1)
    for _ in range(300):
        docs = [f"d{i}" for i in range(rng.randint(1, 6))]
        judged = {d: rng.randint(0, 3) for d in docs if rng.random() < 0.8}
        ranking = rng.sample(docs + ["u1", "u2"], rng.randint(1, len(docs) + 2))
        k = rng.randint(1, 8)
        assert ndcg_at_k(ranking, judged, k) == pytest.approx(brute_force_ndcg(ranking, judged, k), abs=1e-12)


@given(st.lists(st.integers(0, 4), min_size=2, max_size=12), st.integers(1, 12), st.data())
def test_bounds_and_swap_monotonicity(rels, k, data):
    docs = [f"d{i}" for i in range(len(rels))]
    judged = dict(zip(docs, rels))
    ranking = data.draw(st.permutations(docs))
    v = ndcg_at_k(ranking, judged, k)
    assert 0.0 <= v <= 1.0 + 1e-12
    i = data.draw(st.integers(0, len(ranking) - 2))
    if judged[ranking[i + 1]] > judged[ranking[i]]:
        swapped = list(ranking)
        swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
        assert ndcg_at_k(swapped, judged, k) >= v - 1e-12


@given(st.lists(st.integers(0, 3), min_size=1, max_size=15), st.integers(1, 10))
def test_depends_only_on_top_k(rels, k):
    docs = [f"d{i}" for i in range(len(rels))]
    judged = dict(zip(docs, rels))
    head = docs[:k]
    tail = list(reversed(docs[k:]))
    assert ndcg_at_k(docs, judged, k) == ndcg_at_k(head + tail, judged, k)


def test_gain_optimal_prefix_scores_one():
    judged = {"a": 3, "b": 2, "c": 1, "d": 0, "e": 0}
    assert ndcg_at_k(["a", "b", "c", "e", "d"], judged, 10) == pytest.approx(1.0)


def test_aggregate():
    assert aggregate({"a": 1.0, "b": 0.0})[0] == 0.5
    assert aggregate({"only": 0.3}) == (0.3, [("only", 0.3)])
    values = {f"q{i}": random.Random(i).random() for i in range(20)}
    shuffled = dict(sorted(values.items(), key=lambda kv: kv[1]))
    assert aggregate(values)[0] == aggregate(shuffled)[0]
    assert [q for q, _ in aggregate(shuffled)[1]] == sorted(values)
    with pytest.raises(ValidationError):
        aggregate({})

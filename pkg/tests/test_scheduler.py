import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_candidates, true_order
from listrank.backends import (
    BackendError,
    FaultSpec,
    NoisyBackend,
    OracleBackend,
    RankResponse,
)
from listrank.core import Perturbation, WindowConfig
from listrank.scheduler import (
    ConfigError,
    StrategyError,
    full_rank,
    multi_pass_label,
    sliding_call_count,
    sliding_window_pass,
    window_spans,
)


def enumerated_starts(n, w, s):
    """Start offsets listed one by one until the front of the list is reached."""
    starts, j = [], 0
    while True:
        start = max(1, n - w + 1 - j * s)
        starts.append(start)
        if start == 1:
            return starts
        j += 1


class Recorder:
    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    def rank_window(self, request):
        self.requests.append(request)
        return self.inner.rank_window(request)


def test_default_sliding_spans():
    c, scores = make_candidates(100)
    out = sliding_window_pass(c, OracleBackend(scores), WindowConfig(20, 10))
    assert out.calls == 9
    assert [u.window_span for u in out.usage] == [
        (81, 100), (71, 90), (61, 80), (51, 70), (41, 60), (31, 50), (21, 40), (11, 30), (1, 20)]


@pytest.mark.parametrize("n,w,s", [(100, 20, 10), (25, 20, 10), (57, 20, 7), (21, 20, 1), (40, 8, 8)])
def test_spans_match_enumeration(n, w, s):
    assert [a for a, _ in window_spans(n, w, s)] == enumerated_starts(n, w, s)
    assert len(window_spans(n, w, s)) == math.ceil((n - w) / s) + 1 == sliding_call_count(n, w, s)


def test_single_window_when_list_fits():
    c, scores = make_candidates(20)
    out = sliding_window_pass(c, OracleBackend(scores), WindowConfig(20, 10))
    assert out.calls == 1 and out.usage[0].window_span == (1, 20)
    assert list(out.final_order) == true_order(c, scores)


def test_full_rank_one_call_over_everything():
    c, scores = make_candidates(100, seed=3)
    out = full_rank(c, OracleBackend(scores))
    assert out.calls == 1 and out.usage[0].window_span == (1, 100)
    assert list(out.final_order) == true_order(c, scores)


def test_full_rank_singleton_is_identity():
    c, scores = make_candidates(1)
    out = full_rank(c, OracleBackend(scores))
    assert list(out.final_order) == [1] and not out.reports[0].repaired


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(0, 10_000))
def test_full_rank_perfect_oracle_sorts(n, seed):
    c, scores = make_candidates(n, seed)
    assert list(full_rank(c, OracleBackend(scores)).final_order) == true_order(c, scores)


def test_sliding_puts_true_top10_first():
    for seed in range(50):
        c, scores = make_candidates(100, seed)
        out = sliding_window_pass(c, OracleBackend(scores))
        assert list(out.final_order)[:10] == true_order(c, scores)[:10]


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_bubble_pass_guarantee(data):
    w = data.draw(st.integers(1, 25))
    s = data.draw(st.integers(1, w))
    n = data.draw(st.integers(w, 80))
    c, scores = make_candidates(n, data.draw(st.integers(0, 999)))
    out = sliding_window_pass(c, OracleBackend(scores), WindowConfig(w, s))
    assert list(out.final_order)[: w - s] == true_order(c, scores)[: w - s]
    assert out.calls == sliding_call_count(n, w, s)
    assert sorted(out.final_order) == list(range(1, n + 1))


def test_multi_pass_counts_and_exact_sort():
    c, scores = make_candidates(100, seed=11)
    out = multi_pass_label(c, OracleBackend(scores))
    assert out.passes == 9
    assert out.calls == sum(range(1, 10)) == 45
    per_pass = [sum(1 for u in out.usage if u.pass_index == p) for p in range(1, 10)]
    assert per_pass == [9, 8, 7, 6, 5, 4, 3, 2, 1]
    assert list(out.final_order) == true_order(c, scores)


def test_multi_pass_spans_are_global_positions():
    c, scores = make_candidates(100, seed=2)
    out = multi_pass_label(c, OracleBackend(scores))
    second = [u.window_span for u in out.usage if u.pass_index == 2]
    assert second[0] == (81, 100) and second[-1] == (11, 30)
    assert out.usage[-1].window_span == (81, 100)


def test_multi_pass_on_short_list_equals_full_rank():
    c, scores = make_candidates(15, seed=4)
    a = multi_pass_label(c, OracleBackend(scores))
    b = full_rank(c, OracleBackend(scores))
    assert a.final_order == b.final_order and a.usage == b.usage


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_multi_pass_sorts_for_any_geometry(data):
    w = data.draw(st.integers(2, 20))
    s = data.draw(st.integers(1, w - 1))
    n = data.draw(st.integers(1, 90))
    c, scores = make_candidates(n, data.draw(st.integers(0, 999)))
    out = multi_pass_label(c, OracleBackend(scores), WindowConfig(w, s))
    assert list(out.final_order) == true_order(c, scores)
    per_pass = {}
    for u in out.usage:
        per_pass[u.pass_index] = per_pass.get(u.pass_index, 0) + 1
    remaining, expected = n, []
    while remaining > w:
        expected.append(sliding_call_count(remaining, w, s))
        remaining -= w - s
    expected.append(1)
    assert [per_pass[p] for p in sorted(per_pass)] == expected


def test_multi_pass_needs_step_below_window():
    c, scores = make_candidates(30)
    with pytest.raises(ConfigError):
        multi_pass_label(c, OracleBackend(scores), WindowConfig(10, 10))


def test_truncated_output_keeps_top10():
    for seed in range(30):
        c, scores = make_candidates(100, seed)
        full = sliding_window_pass(c, OracleBackend(scores))
        cut = sliding_window_pass(c, OracleBackend(scores), WindowConfig(20, 10, top_k_output=10))
        assert list(cut.final_order)[:10] == list(full.final_order)[:10]


def test_truncated_requests_ask_for_k_ids():
    c, scores = make_candidates(100)
    rec = Recorder(OracleBackend(scores))
    sliding_window_pass(c, rec, WindowConfig(20, 10, top_k_output=10))
    assert {r.max_output_ids for r in rec.requests} == {10}


def test_k_equal_to_window_is_untruncated():
    c, scores = make_candidates(100, seed=8)
    rec = Recorder(OracleBackend(scores))
    a = sliding_window_pass(c, rec, WindowConfig(20, 10, top_k_output=20))
    b = sliding_window_pass(c, OracleBackend(scores))
    assert a.final_order == b.final_order
    assert {r.max_output_ids for r in rec.requests} == {None}


def test_k_below_step_is_rejected():
    c, scores = make_candidates(50)
    with pytest.raises(ConfigError):
        sliding_window_pass(c, OracleBackend(scores), WindowConfig(20, 10, top_k_output=5))


def test_full_rank_truncated_tail_keeps_original_order():
    c, scores = make_candidates(100, seed=5)
    out = full_rank(c, OracleBackend(scores), WindowConfig(20, 10, top_k_output=10))
    top = true_order(c, scores)[:10]
    expected = top + [i for i in range(1, 101) if i not in top]
    assert list(out.final_order) == expected


def test_multi_pass_with_truncation_still_sorts():
    c, scores = make_candidates(100, seed=9)
    out = multi_pass_label(c, OracleBackend(scores), WindowConfig(20, 10, top_k_output=10))
    # the final single window only lists its top 10; everything before it is exact
    assert list(out.final_order)[:90] == true_order(c, scores)[:90]


def test_perturbation_is_invisible_to_a_perfect_oracle():
    c, scores = make_candidates(60, seed=1)
    base = full_rank(c, OracleBackend(scores))
    for p in (Perturbation("reverse"), Perturbation("shuffle", 3)):
        out = full_rank(c, OracleBackend(scores), WindowConfig(perturbation=p))
        assert out.final_order == base.final_order
        assert out.perturbation == p


def test_perturbation_changes_what_the_model_sees():
    c, scores = make_candidates(30)
    rec = Recorder(OracleBackend(scores))
    full_rank(c, rec, WindowConfig(perturbation=Perturbation("reverse")))
    assert rec.requests[0].doc_ids == tuple(reversed(c.doc_ids))


class Garbage:
    def __init__(self, seed):
        self.rng = random.Random(seed)

    def rank_window(self, request):
        m = len(request.doc_ids)
        text = " ".join(f"[{self.rng.randint(-2, m + 3)}]" for _ in range(self.rng.randint(0, m + 5)))
        return RankResponse(self.rng.choice([text, "", "no idea", text + " sure"]), 1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 70), st.integers(0, 99), st.sampled_from(["full", "sliding", "multi"]))
def test_every_strategy_survives_garbage(n, seed, which):
    c, _ = make_candidates(n)
    fn = {"full": full_rank, "sliding": sliding_window_pass, "multi": multi_pass_label}[which]
    out = fn(c, Garbage(seed), WindowConfig(8, 3))
    assert sorted(out.final_order) == list(range(1, n + 1))
    assert sorted(out.reranked(c).doc_ids) == sorted(c.doc_ids)
    assert len(out.reports) == out.calls


def test_empty_output_window_falls_back_to_identity():
    c, scores = make_candidates(20)
    noisy = NoisyBackend(OracleBackend(scores), FaultSpec(empty=1.0))
    out = full_rank(c, noisy)
    assert out.final_order.is_identity() and out.reports[0].fallback


class FailsAfter:
    def __init__(self, inner, ok_calls):
        self.inner, self.left = inner, ok_calls

    def rank_window(self, request):
        if self.left == 0:
            raise BackendError("gave up after retries")
        self.left -= 1
        return self.inner.rank_window(request)


def test_backend_failure_carries_partial_usage():
    c, scores = make_candidates(100)
    with pytest.raises(StrategyError) as info:
        sliding_window_pass(c, FailsAfter(OracleBackend(scores), 3))
    assert len(info.value.usage) == 3


def test_redundancy_counts():
    c, scores = make_candidates(100)
    s = sliding_window_pass(c, OracleBackend(scores))
    f = full_rank(c, OracleBackend(scores))
    assert (s.calls, s.passage_evaluations, f.calls, f.passage_evaluations) == (9, 180, 1, 100)

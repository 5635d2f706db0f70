"""Request handling shared by the HTTP app and the in-process client."""

from __future__ import annotations

import logging
from decimal import Decimal
from typing import Dict, Mapping, Optional

from ..accounting import strategy_report
from ..backends import (
    Backend,
    FaultSpec,
    LatencyModel,
    NoisyBackend,
    OracleBackend,
    ReplayBackend,
    TranscriptStore,
)
from ..core import (
    DEFAULT_PRICES,
    CandidateList,
    Passage,
    Permutation,
    Perturbation,
    PriceSheet,
    Qrels,
    Query,
    ValidationError,
    WindowConfig,
)
from ..evaluation import evaluate_run, format_table
from ..lossweights import emit_training_example, weighted_label
from ..parsing import extract_ids
from ..prompting import PromptTemplate
from ..scheduler import StrategyOutcome, run_strategy
from ..trec import row_to_usage, usage_to_row
from . import schemas

logger = logging.getLogger(__name__)


class Service:
    """Holds long-lived state: named backends, the replay transcript, prices.

    ``replay`` is ``"off"``, ``"record"`` (serve hits, record misses) or
    ``"strict"`` (misses fail). The pseudo-backend ``oracle`` is built per
    request from the passages' hidden scores; ``replay`` means "transcript
    only".
    """

    def __init__(
        self,
        backends: Optional[Mapping[str, Backend]] = None,
        store: Optional[TranscriptStore] = None,
        replay: str = "off",
        prices: Optional[Mapping[str, PriceSheet]] = None,
        default_model: str = "gpt-4o-mini-2024-07-18",
        template: Optional[PromptTemplate] = None,
        oracle_latency: Optional[LatencyModel] = None,
    ):
        if replay not in ("off", "record", "strict"):
            raise ValueError(f"unknown replay mode {replay!r}")
        if replay != "off" and store is None:
            raise ValueError("replay needs a transcript store")
        self.backends: Dict[str, Backend] = dict(backends or {})
        self.store = store
        self.replay = replay
        self.prices = dict(prices or DEFAULT_PRICES)
        self.default_model = default_model
        self.template = template
        self.oracle_latency = oracle_latency

    def backend_for(self, req: schemas.RerankRequest) -> Backend:
        inner: Optional[Backend]
        if req.backend == "oracle":
            if any(p.score is None for p in req.passages):
                raise ValidationError("the oracle backend needs a score on every passage")
            inner = OracleBackend(
                {p.docid: p.score for p in req.passages}, latency=self.oracle_latency
            )
        elif req.backend == "replay":
            inner = None
        elif req.backend in self.backends:
            inner = self.backends[req.backend]
        else:
            raise ValidationError(f"unknown backend {req.backend!r}")

        backend: Backend
        if self.replay == "strict" or inner is None:
            if self.store is None:
                raise ValidationError("the replay backend needs a transcript file")
            backend = ReplayBackend(self.store, None)
        elif self.replay == "record":
            backend = ReplayBackend(self.store, inner)
        else:
            backend = inner
        if req.faults is not None:
            f = req.faults
            spec = FaultSpec(f.duplicate, f.drop, f.out_of_range, f.prose, f.empty)
            backend = NoisyBackend(backend, spec, f.seed)
        return backend

    def _run(self, req: schemas.RerankRequest):
        candidates = CandidateList(
            Query(req.query_id, req.query),
            tuple(Passage(p.docid, p.text) for p in req.passages),
        )
        cfg = WindowConfig(req.window, req.step, req.topk_output, Perturbation.parse(req.perturb))
        outcome = run_strategy(
            req.strategy,
            candidates,
            self.backend_for(req),
            cfg,
            template=self.template,
            model_name=req.model or self.default_model,
        )
        return candidates, outcome

    @staticmethod
    def _outcome_out(candidates: CandidateList, outcome: StrategyOutcome) -> schemas.RerankResponse:
        return schemas.RerankResponse(
            query_id=candidates.query.query_id,
            strategy=outcome.strategy,
            order=list(outcome.reranked(candidates).doc_ids),
            permutation=list(outcome.final_order),
            calls=outcome.calls,
            passes=outcome.passes,
            passage_evaluations=outcome.passage_evaluations,
            perturbation=str(outcome.perturbation),
            usage=[schemas.Usage(**usage_to_row(u, outcome.strategy)) for u in outcome.usage],
            reports=[schemas.ParseReportOut(**r.__dict__) for r in outcome.reports],
        )

    def rerank(self, req: schemas.RerankRequest) -> schemas.RerankResponse:
        candidates, outcome = self._run(req)
        return self._outcome_out(candidates, outcome)

    def label(self, req: schemas.LabelRequest) -> schemas.LabelResponse:
        candidates, outcome = self._run(req)
        perturbation = Perturbation.parse(req.perturb)
        record = emit_training_example(
            candidates,
            outcome.final_order,
            req.alpha,
            template=self.template,
            teacher=req.teacher or req.backend,
            strategy=outcome.strategy,
            seed=perturbation.seed,
        )
        return schemas.LabelResponse(
            record=schemas.TrainingRecordOut(**record.__dict__),
            outcome=self._outcome_out(candidates, outcome),
        )

    def evaluate(self, req: schemas.EvalRequest) -> schemas.EvalResponse:
        scores = evaluate_run(req.run, Qrels(req.qrels), req.k, req.gain)
        if not scores:
            raise ValidationError("the run has no queries")
        mean = sum(s.ndcg for s in scores) / len(scores)
        return schemas.EvalResponse(
            k=req.k,
            mean=mean,
            per_query=[schemas.QueryScoreOut(**s.__dict__) for s in scores],
            table=format_table(scores, req.k),
        )

    def price_sheet(self, model: Optional[str], prices: Optional[schemas.PriceIn]) -> PriceSheet:
        if prices is not None:
            return PriceSheet(prices.model, Decimal(prices.input_per_1k), Decimal(prices.output_per_1k))
        name = model or self.default_model
        try:
            return self.prices[name]
        except KeyError:
            raise ValidationError(f"no price sheet for model {name!r}") from None

    def cost(self, req: schemas.CostRequest) -> schemas.CostResponse:
        sheet = self.price_sheet(req.model, req.prices)
        by_strategy: Dict[str, list] = {}
        for u in req.usage:
            by_strategy.setdefault(u.strategy, []).append(row_to_usage(u.model_dump(by_alias=True)))
        report = strategy_report(by_strategy, sheet)
        return schemas.CostResponse(
            model=sheet.model_name,
            summaries=[
                schemas.SummaryOut(
                    **{**s.__dict__, "cost": str(s.cost), "total_cost": str(s.total_cost)}
                )
                for s in report.summaries.values()
            ],
            ratios=report.ratios,
            table=report.format(),
        )

    def weights(self, req: schemas.WeightsRequest) -> schemas.WeightsResponse:
        ids = extract_ids(req.perm)
        if not ids:
            raise ValidationError(f"no bracketed IDs in {req.perm!r}")
        label = weighted_label(Permutation(tuple(ids)), req.alpha)
        return schemas.WeightsResponse(
            label=label.text,
            alpha=label.alpha,
            spans=[
                schemas.SpanOut(
                    start=s.start, end=s.end, kind=s.kind, rank=s.rank,
                    text=label.text[s.start : s.end], weight=w,
                )
                for s, w in zip(label.spans, label.weights)
            ],
        )

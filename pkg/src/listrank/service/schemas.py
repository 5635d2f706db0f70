from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

Strategy = Literal["full", "sliding", "multipass"]


class PassageIn(BaseModel):
    docid: str = Field(..., min_length=1)
    text: str = Field(..., min_length=1)
    score: Optional[float] = Field(None, description="Hidden relevance used by the oracle backend")


class Faults(BaseModel):
    duplicate: float = Field(0.0, ge=0, le=1)
    drop: float = Field(0.0, ge=0, le=1)
    out_of_range: float = Field(0.0, ge=0, le=1)
    prose: float = Field(0.0, ge=0, le=1)
    empty: float = Field(0.0, ge=0, le=1)
    seed: int = 0


class RerankRequest(BaseModel):
    query_id: str = Field(..., min_length=1)
    query: str = Field(..., min_length=1)
    passages: List[PassageIn] = Field(..., min_length=1)
    strategy: Strategy = "sliding"
    window: int = Field(20, ge=1)
    step: int = Field(10, ge=1)
    topk_output: Optional[int] = Field(None, ge=1)
    perturb: str = "none"
    backend: str = "oracle"
    model: str = ""
    faults: Optional[Faults] = None


class Usage(BaseModel):
    query_id: str
    strategy: str
    pass_: int = Field(1, alias="pass")
    window_start: int
    window_end: int
    input_tokens: int = Field(..., ge=0)
    output_tokens: int = Field(..., ge=0)
    latency: float = Field(..., ge=0)

    model_config = {"populate_by_name": True}


class ParseReportOut(BaseModel):
    repaired: bool
    duplicates_removed: int
    out_of_range_dropped: int
    missing_appended: int
    fallback: bool


class RerankResponse(BaseModel):
    query_id: str
    strategy: str
    order: List[str]
    permutation: List[int]
    calls: int
    passes: int
    passage_evaluations: int
    perturbation: str
    usage: List[Usage]
    reports: List[ParseReportOut]


class LabelRequest(RerankRequest):
    strategy: Strategy = "multipass"
    alpha: float = Field(1.0, gt=0, le=1)
    teacher: str = ""


class TrainingRecordOut(BaseModel):
    prompt: str
    label: str
    spans: List[Dict[str, Any]]
    alpha: float
    meta: Dict[str, Any]


class LabelResponse(BaseModel):
    record: TrainingRecordOut
    outcome: RerankResponse


class EvalRequest(BaseModel):
    run: Dict[str, List[str]]
    qrels: Dict[str, Dict[str, int]]
    k: int = Field(10, ge=1)
    gain: Literal["exp", "linear"] = "exp"


class QueryScoreOut(BaseModel):
    query_id: str
    ndcg: float
    has_relevant: bool


class EvalResponse(BaseModel):
    k: int
    mean: float
    per_query: List[QueryScoreOut]
    table: str


class PriceIn(BaseModel):
    model: str
    input_per_1k: str
    output_per_1k: str


class CostRequest(BaseModel):
    usage: List[Usage]
    model: Optional[str] = None
    prices: Optional[PriceIn] = None


class SummaryOut(BaseModel):
    strategy: str
    queries: int
    calls: float
    passage_evaluations: float
    redundancy: float
    input_tokens: float
    output_tokens: float
    latency: float
    cost: str
    total_cost: str


class CostResponse(BaseModel):
    model: str
    summaries: List[SummaryOut]
    ratios: Dict[str, float]
    table: str


class WeightsRequest(BaseModel):
    perm: str
    alpha: float = Field(1.0, gt=0, le=1)


class SpanOut(BaseModel):
    start: int
    end: int
    kind: str
    rank: Optional[int]
    text: str
    weight: float


class WeightsResponse(BaseModel):
    label: str
    alpha: float
    spans: List[SpanOut]

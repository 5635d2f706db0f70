"""Command-line entry point.

Every subcommand goes through a client: in-process by default, or against a
running ``listrank serve`` when ``--server`` is given. Exit codes: 0 success,
1 invalid input or configuration, 2 backend failure after retries.
"""

from __future__ import annotations

import argparse
import logging
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import pydantic

from .backends import BackendError, LatencyModel, LiveBackend, LiveConfig, TranscriptStore
from .config import load_config
from .core import ValidationError
from .lossweights import TrainingRecord
from .prompting import PromptTemplate
from .scheduler import StrategyError
from .service import HttpClient, LocalClient, Service, schemas
from .trec import (
    build_candidates,
    format_ledger,
    format_run,
    load_ledger,
    load_price_sheets,
    load_qrels,
    load_queries,
    load_run,
    load_corpus,
    run_rankings,
    usage_to_row,
)

logger = logging.getLogger("listrank")

EXIT_OK, EXIT_INVALID, EXIT_BACKEND = 0, 1, 2
PASSES = {"multi": "multipass", "single": "sliding", "full": "full"}


def _add_ranking_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--runs", required=True, help="input TREC run file (first-stage candidates)")
    p.add_argument("--corpus", required=True, help="JSON-lines corpus {docid, contents}")
    p.add_argument("--queries", required=True, help="TSV queries qid<TAB>text")
    p.add_argument("--window", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--topk-output", type=int, default=None)
    p.add_argument("--perturb", default="none", help="none | reverse | shuffle:SEED")
    p.add_argument("--backend", default="oracle", help="oracle | replay | live")
    p.add_argument("--model", default=None)
    p.add_argument("--depth", type=int, default=None, help="rerank only the top DEPTH candidates")
    p.add_argument("--oracle-qrels", default=None,
                   help="hidden scores for the oracle come from these qrels instead of run scores")
    p.add_argument("--replay", default=None, help="JSON-lines transcript for record/replay")
    p.add_argument("--replay-mode", choices=("record", "strict"), default=None)
    p.add_argument("--fault-rate", type=float, default=0.0,
                   help="inject every fault class at this rate (noisy backend)")
    p.add_argument("--fault-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--ledger", default=None, help="usage ledger path (default: OUT.ledger.jsonl)")
    p.add_argument("--max-passage-bytes", type=int, default=None)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config with defaults")
    p.add_argument("--server", default=None, help="URL of a running 'listrank serve'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="listrank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rerank", help="rerank a run file with a listwise strategy")
    _common(p)
    _add_ranking_args(p)
    p.add_argument("--strategy", choices=("full", "sliding", "multipass"), default="sliding")
    p.add_argument("--out", required=True)
    p.add_argument("--tag", default=None)

    p = sub.add_parser("make-labels", help="build weighted distillation records")
    _common(p)
    _add_ranking_args(p)
    p.add_argument("--passes", choices=tuple(PASSES), default="multi")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--teacher", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="NDCG@k of a run against qrels")
    _common(p)
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--gain", choices=("exp", "linear"), default="exp")

    p = sub.add_parser("cost", help="token, latency and cost report from usage ledgers")
    _common(p)
    p.add_argument("--ledger", action="append", required=True)
    p.add_argument("--prices", default=None, help="JSON price sheet keyed by model name")
    p.add_argument("--model", default=None)

    p = sub.add_parser("weights", help="dump label spans and their loss weights")
    _common(p)
    p.add_argument("--perm", required=True, help='e.g. "[3] > [1] > [2]"')
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--replay", default=None)
    p.add_argument("--replay-mode", choices=("record", "strict"), default="record")
    return parser


def make_service(config: dict, replay: Optional[str] = None, replay_mode: str = "off") -> Service:
    backends = {}
    if config.get("live") is not None:
        live_cfg = {"model": config["model"], **config["live"]}
        backends["live"] = _LazyLive(LiveConfig(**live_cfg))
    store = TranscriptStore(replay) if replay else None
    template = PromptTemplate.from_file(config["template"]) if config.get("template") else None
    return Service(
        backends=backends,
        store=store,
        replay=replay_mode if store is not None else "off",
        prices=load_price_sheets(config.get("prices")),
        default_model=config["model"],
        template=template,
        oracle_latency=LatencyModel(**config["oracle_latency"]),
    )


class _LazyLive:
    """Defers building the HTTP client until a live call is actually made."""

    def __init__(self, config: LiveConfig):
        self.config = config
        self._backend: Optional[LiveBackend] = None
        self._lock = threading.Lock()

    def rank_window(self, request):
        with self._lock:
            if self._backend is None:
                self._backend = LiveBackend(self.config)
        return self._backend.rank_window(request)


def _client(args, config: dict, replay: Optional[str] = None, replay_mode: str = "off"):
    if args.server:
        return HttpClient(args.server)
    return LocalClient(make_service(config, replay, replay_mode))


def _ranking_requests(args, config: dict, label: bool = False) -> List[schemas.RerankRequest]:
    max_bytes = args.max_passage_bytes or config.get("max_passage_bytes")
    run = load_run(args.runs)
    candidates = build_candidates(
        run,
        load_corpus(args.corpus, max_bytes),
        load_queries(args.queries),
        args.depth or config.get("depth"),
        run_path=args.runs,
    )
    hidden = load_qrels(args.oracle_qrels) if args.oracle_qrels else None
    faults = None
    if args.fault_rate:
        r = args.fault_rate
        faults = schemas.Faults(duplicate=r, drop=r, out_of_range=r, prose=r, empty=r,
                                seed=args.fault_seed)
    requests = []
    for cand in candidates:
        scores = {e.doc_id: e.score for e in run[cand.query.query_id]}
        if hidden is not None:
            scores = {d: float(hidden.relevance(cand.query.query_id, d)) for d in cand.doc_ids}
        fields = dict(
            query_id=cand.query.query_id,
            query=cand.query.body,
            passages=[
                schemas.PassageIn(docid=p.doc_id, text=p.body, score=scores.get(p.doc_id))
                for p in cand.passages
            ],
            window=args.window or config["window"],
            step=args.step or config["step"],
            topk_output=args.topk_output,
            perturb=args.perturb,
            backend=args.backend,
            model=args.model or config["model"],
            faults=faults,
        )
        if label:
            fields.update(
                strategy=PASSES[args.passes],
                alpha=args.alpha if args.alpha is not None else config["alpha"],
                teacher=args.teacher,
            )
            requests.append(schemas.LabelRequest(**fields))
        else:
            fields["strategy"] = args.strategy
            requests.append(schemas.RerankRequest(**fields))
    return requests


def _replay_mode(args) -> str:
    if not args.replay:
        return "off"
    if args.replay_mode:
        return args.replay_mode
    return "strict" if args.backend == "replay" else "record"


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def cmd_rerank(args, config) -> int:
    requests = _ranking_requests(args, config)
    client = _client(args, config, args.replay, _replay_mode(args))
    try:
        results = _map_ordered(client.rerank, requests, args.workers or config["workers"])
    finally:
        client.close()
    tag = args.tag or f"listrank-{args.strategy}"
    _write(args.out, format_run(((r.query_id, r.order) for r in results), tag))
    rows = [u.model_dump(by_alias=True) for r in results for u in r.usage]
    _write(args.ledger or f"{args.out}.ledger.jsonl", format_ledger(rows))
    calls = sum(r.calls for r in results)
    logger.info("reranked %d queries with %d calls", len(results), calls)
    return EXIT_OK


def cmd_make_labels(args, config) -> int:
    requests = _ranking_requests(args, config, label=True)
    client = _client(args, config, args.replay, _replay_mode(args))
    try:
        results = _map_ordered(client.label, requests, args.workers or config["workers"])
    finally:
        client.close()
    lines = [TrainingRecord(**{**r.record.model_dump(), "spans": tuple(r.record.spans)}).to_json()
             for r in results]
    _write(args.out, "".join(line + "\n" for line in lines))
    rows = [u.model_dump(by_alias=True) for r in results for u in r.outcome.usage]
    _write(args.ledger or f"{args.out}.ledger.jsonl", format_ledger(rows))
    return EXIT_OK


def cmd_eval(args, config) -> int:
    run = run_rankings(load_run(args.run))
    qrels = load_qrels(args.qrels)
    req = schemas.EvalRequest(
        run=run,
        qrels={q: qrels.for_query(q) for q in qrels.query_ids},
        k=args.k,
        gain=args.gain,
    )
    client = _client(args, config)
    try:
        print(client.evaluate(req).table)
    finally:
        client.close()
    return EXIT_OK


def cmd_cost(args, config) -> int:
    usage = []
    for path in args.ledger:
        for strategy, records in load_ledger(path).items():
            usage.extend(schemas.Usage(**usage_to_row(u, strategy)) for u in records)
    prices = None
    if args.prices:
        sheets = load_price_sheets(args.prices)
        model = args.model or config["model"]
        if model not in sheets:
            raise ValidationError(f"{args.prices} has no entry for model {model!r}")
        s = sheets[model]
        prices = schemas.PriceIn(model=model, input_per_1k=str(s.input_price_per_1k),
                                 output_per_1k=str(s.output_price_per_1k))
    client = _client(args, config)
    try:
        report = client.cost(schemas.CostRequest(usage=usage, model=args.model, prices=prices))
    finally:
        client.close()
    print(f"model: {report.model}")
    print(report.table)
    return EXIT_OK


def cmd_weights(args, config) -> int:
    alpha = args.alpha if args.alpha is not None else config["alpha"]
    client = _client(args, config)
    try:
        out = client.weights(schemas.WeightsRequest(perm=args.perm, alpha=alpha))
    finally:
        client.close()
    print(f"label: {out.label}")
    print(f"{'start':>5} {'end':>5} {'kind':<10} {'rank':>4} {'text':<8} weight")
    for s in out.spans:
        rank = "" if s.rank is None else str(s.rank)
        print(f"{s.start:>5} {s.end:>5} {s.kind:<10} {rank:>4} {s.text!r:<8} {s.weight:.6f}")
    return EXIT_OK


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service import create_app

    mode = args.replay_mode if args.replay else "off"
    app = create_app(make_service(config, args.replay, mode))
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "rerank": cmd_rerank,
    "make-labels": cmd_make_labels,
    "eval": cmd_eval,
    "cost": cmd_cost,
    "weights": cmd_weights,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (ValidationError, pydantic.ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (StrategyError, BackendError) as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())

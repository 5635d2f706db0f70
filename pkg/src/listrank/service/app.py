"""HTTP surface for the reranking toolkit."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..core import ValidationError
from ..scheduler import StrategyError
from ..trec import usage_to_row
from . import schemas
from .handlers import Service


def create_app(service: Service | None = None) -> FastAPI:
    service = service or Service()
    app = FastAPI(title="listrank", version="0.1.0")
    app.state.service = service

    @app.exception_handler(ValidationError)
    async def _invalid(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(StrategyError)
    async def _backend_failed(request: Request, exc: StrategyError):
        # usage is returned so callers can still account for the spent calls
        usage = [usage_to_row(u, "") for u in exc.usage]
        return JSONResponse(status_code=502, content={"detail": str(exc), "usage": usage})

    @app.get("/health")
    def health():
        return {"status": "ok", "backends": ["oracle", "replay", *service.backends]}

    @app.post("/rerank", response_model=schemas.RerankResponse)
    def rerank(req: schemas.RerankRequest):
        return service.rerank(req)

    @app.post("/labels", response_model=schemas.LabelResponse)
    def labels(req: schemas.LabelRequest):
        return service.label(req)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        return service.evaluate(req)

    @app.post("/cost", response_model=schemas.CostResponse)
    def cost(req: schemas.CostRequest):
        return service.cost(req)

    @app.post("/weights", response_model=schemas.WeightsResponse)
    def weights(req: schemas.WeightsRequest):
        return service.weights(req)

    return app

"""Clients used by the CLI: in-process, or over HTTP against ``listrank serve``."""

from __future__ import annotations

from typing import Type, TypeVar

import httpx
from pydantic import BaseModel

from ..core import ValidationError
from ..scheduler import StrategyError
from . import schemas
from .handlers import Service

T = TypeVar("T", bound=BaseModel)


class LocalClient:
    def __init__(self, service: Service):
        self.service = service

    def rerank(self, req: schemas.RerankRequest) -> schemas.RerankResponse:
        return self.service.rerank(req)

    def label(self, req: schemas.LabelRequest) -> schemas.LabelResponse:
        return self.service.label(req)

    def evaluate(self, req: schemas.EvalRequest) -> schemas.EvalResponse:
        return self.service.evaluate(req)

    def cost(self, req: schemas.CostRequest) -> schemas.CostResponse:
        return self.service.cost(req)

    def weights(self, req: schemas.WeightsRequest) -> schemas.WeightsResponse:
        return self.service.weights(req)

    def close(self) -> None:
        pass


class HttpClient:
    """Maps HTTP 400 to :class:`ValidationError` and 502 to :class:`StrategyError`."""

    def __init__(self, base_url: str, timeout: float = 600.0, client: httpx.Client | None = None):
        self.http = client or httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout)

    def _post(self, path: str, req: BaseModel, out: Type[T]) -> T:
        resp = self.http.post(path, json=req.model_dump(mode="json", by_alias=True))
        if resp.status_code in (400, 422):
            raise ValidationError(f"{path}: {resp.json().get('detail')}")
        if resp.status_code == 502:
            raise StrategyError(f"{path}: {resp.json().get('detail')}")
        resp.raise_for_status()
        return out.model_validate(resp.json())

    def rerank(self, req):
        return self._post("/rerank", req, schemas.RerankResponse)

    def label(self, req):
        return self._post("/labels", req, schemas.LabelResponse)

    def evaluate(self, req):
        return self._post("/eval", req, schemas.EvalResponse)

    def cost(self, req):
        return self._post("/cost", req, schemas.CostResponse)

    def weights(self, req):
        return self._post("/weights", req, schemas.WeightsResponse)

    def close(self) -> None:
        self.http.close()

"""FastAPI application exposing the solver and simulator.

Error mapping: model/config problems come back as 400 with kind
"validation"; numerical failures (singular systems, integration trouble) as
500 with kind "numerical".  Responses are plain JSON renderings of the
response schemas, so a thin client can persist them directly.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import schemas
from ..errors import (
    ConfigError,
    DomainError,
    ModelError,
    SupresError,
)


def _error_response(status: int, kind: str, exc: Exception) -> JSONResponse:
    detail = schemas.ErrorDetail(kind=kind, type=type(exc).__name__, message=str(exc))
    return JSONResponse(status_code=status, content={"error": detail.model_dump()})


def create_app() -> FastAPI:
    from .. import service  # deferred: service imports these schemas

    app = FastAPI(title="supres", version="0.1.0",
                  description="Two-regime support/resistance trading-rule solver")

    @app.exception_handler(SupresError)
    async def _supres_handler(request: Request, exc: SupresError):
        if isinstance(exc, (ModelError, ConfigError, DomainError)):
            return _error_response(400, "validation", exc)
        return _error_response(500, "numerical", exc)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/solve/sell", response_model=schemas.SellRecord)
    def solve_sell(req: schemas.SolveSellRequest):
        return service.solve_sell(req)

    @app.post("/solve/buy", response_model=schemas.BuyRecord)
    def solve_buy(req: schemas.SolveBuyRequest):
        return service.solve_buy(req)

    @app.post("/simulate", response_model=schemas.SimulateRecord)
    def simulate(req: schemas.SimulateRequest):
        return service.simulate(req)

    @app.post("/sweep", response_model=schemas.SweepRecord)
    def sweep(req: schemas.SweepRequest):
        return service.sweep(req)

    @app.post("/check", response_model=schemas.CheckRecord)
    def check(req: schemas.CheckRequest):
        return service.check(req)

    return app

"""FastAPI application exposing the simulation toolkit over HTTP."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import (
    ConfigurationError,
    DataIoError,
    DomainError,
    EstimationError,
    StochPathError,
)
from . import handlers
from .schemas import (
    CompareRequest,
    CompareResponse,
    EstimateRequest,
    EstimateResponse,
    SimulateRequest,
    SimulateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="stochpath",
        description="Seeded Monte Carlo forecasting of daily price ranges "
                    "with GBM and Heston dynamics.",
        version="0.1.0",
    )

    @app.exception_handler(StochPathError)
    def _stochpath_error(_: Request, exc: StochPathError) -> JSONResponse:
        if isinstance(exc, (DomainError, ConfigurationError)):
            status = 400
        elif isinstance(exc, (DataIoError, EstimationError)):
            status = 422
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/estimate", response_model=EstimateResponse,
              response_model_exclude_none=True)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        return handlers.estimate(req)

    @app.post("/simulate", response_model=SimulateResponse,
              response_model_exclude_none=True)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        return handlers.simulate(req)

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        return handlers.compare(req)

    return app


app = create_app()

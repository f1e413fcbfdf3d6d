"""Pydantic request/response models for the HTTP service and CLI client."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class GbmParamsIn(BaseModel):
    mu: float
    sigma: float = Field(ge=0)
    x0: float = Field(gt=0)


class HestonParamsIn(BaseModel):
    mu: float
    kappa: float = Field(ge=0)
    theta: float
    sigma_v: float = Field(ge=0)
    rho: float = Field(ge=-1, le=1)
    v0: float = Field(ge=0)
    x0: float = Field(gt=0)


class SimConfigIn(BaseModel):
    n_paths: int = Field(default=10_000, ge=1)
    n_steps: int = Field(default=1, ge=1)
    horizon: float = Field(default=1.0 / 252.0, gt=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


class SimulateRequest(BaseModel):
    model: Literal["gbm", "heston"]
    scheme: Literal["exact", "em"] = "em"
    gbm: GbmParamsIn | None = None
    heston: HestonParamsIn | None = None
    config: SimConfigIn = SimConfigIn()
    exact_low: float | None = None
    exact_high: float | None = None
    range_over: Literal["terminal", "path"] = "terminal"
    include_paths: bool = False
    path_cap: int = Field(default=10_000, ge=0)
    raw: bool = False


class SummaryOut(BaseModel):
    terminal_min: float
    terminal_max: float
    terminal_mean: float
    terminal_std: float
    quantiles: dict[str, float]
    truncation_events: int | None = None


class ReportOut(BaseModel):
    simulated_low: float
    simulated_high: float
    exact_low: float
    exact_high: float
    abs_error_low: float
    abs_error_high: float


class PathOut(BaseModel):
    path: int
    times: list[float]
    prices: list[float]
    variances: list[float] | None = None


class SimulateResponse(BaseModel):
    schema_version: int
    model: str
    scheme: str
    params: dict[str, float]
    config: dict
    summary: SummaryOut
    report: ReportOut | None = None
    warnings: list[str] = []
    paths: list[PathOut] | None = None


class EstimateRequest(BaseModel):
    csv_text: str
    window: int = Field(default=21, ge=5)
    include_heston: bool = True
    dt: float = Field(default=1.0 / 252.0, gt=0)


class EstimateResponse(BaseModel):
    gbm: dict[str, float]
    heston: dict[str, float] | None = None
    standard_errors: dict[str, float]
    warnings: list[str] = []
    n_observations: int


class RangeIn(BaseModel):
    low: float
    high: float


class CompareRequest(BaseModel):
    """Head-to-head run; both models share mu and x0 by construction.

    Model parameters may be omitted when both simulated ranges are
    supplied directly (bypass mode, no simulation runs).
    """

    mu: float | None = None
    x0: float | None = Field(default=None, gt=0)
    sigma: float | None = Field(default=None, ge=0)
    kappa: float | None = Field(default=None, ge=0)
    theta: float | None = None
    sigma_v: float | None = Field(default=None, ge=0)
    rho: float | None = Field(default=None, ge=-1, le=1)
    v0: float | None = Field(default=None, ge=0)
    config: SimConfigIn = SimConfigIn()
    exact_low: float
    exact_high: float
    coupled: bool = True
    gbm_range: RangeIn | None = None
    heston_range: RangeIn | None = None


class ModelComparison(BaseModel):
    source: Literal["simulated", "provided"]
    simulated_low: float
    simulated_high: float
    width: float
    abs_error_low: float
    abs_error_high: float


class CompareResponse(BaseModel):
    exact_low: float
    exact_high: float
    coupled: bool
    seed: int
    heston: ModelComparison
    gbm: ModelComparison
    warnings: list[str] = []


class ErrorResponse(BaseModel):
    error: str
    detail: str

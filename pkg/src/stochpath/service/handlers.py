"""Request handlers shared by the FastAPI routes and the CLI client.

Each handler consumes a request model, drives the core package, and
returns a response model; all domain errors propagate as stochpath
exceptions for the caller to map (HTTP status or exit code).
"""
from __future__ import annotations

from .. import data_io
from ..calibration import calibrate
from ..engine import (
    RangeErrorReport,
    SimulationConfig,
    compare_models,
    range_error,
    run_simulation,
)
from ..errors import ConfigurationError
from ..models import GbmParams, HestonParams
from .schemas import (
    CompareRequest,
    CompareResponse,
    EstimateRequest,
    EstimateResponse,
    ModelComparison,
    PathOut,
    ReportOut,
    SimulateRequest,
    SimulateResponse,
    SummaryOut,
)


def _engine_scheme(model: str, scheme: str) -> str:
    if model == "heston" and scheme == "exact":
        raise ConfigurationError(
            "the heston model has no exact scheme; use scheme='em'"
        )
    return f"{model}-{scheme}"


def _params_from_request(req: SimulateRequest):
    if req.model == "gbm":
        if req.gbm is None:
            raise ConfigurationError("model='gbm' requires the gbm parameter block")
        return GbmParams(**req.gbm.model_dump())
    if req.heston is None:
        raise ConfigurationError("model='heston' requires the heston parameter block")
    return HestonParams(**req.heston.model_dump())


def simulate_bundle(req: SimulateRequest):
    """Core of the simulate endpoint: returns ``(ResultBundle, paths)``."""
    params = _params_from_request(req)
    scheme = _engine_scheme(req.model, req.scheme)
    config = SimulationConfig(**req.config.model_dump())
    paths, summary = run_simulation(
        params, config, scheme,
        path_cap=req.path_cap if req.include_paths else 0,
        whole_path=req.range_over == "path",
    )
    report = None
    if req.exact_low is not None and req.exact_high is not None:
        report = range_error(summary, req.exact_low, req.exact_high)
    elif (req.exact_low is None) != (req.exact_high is None):
        raise ConfigurationError("exact_low and exact_high must be given together")
    bundle = data_io.ResultBundle(scheme=scheme, params=params, config=config,
                                  summary=summary, report=report)
    return bundle, paths


def simulate(req: SimulateRequest) -> SimulateResponse:
    """Run one model and return its bundle, optionally with stored paths."""
    bundle, paths = simulate_bundle(req)
    body = data_io.bundle_to_dict(bundle, raw=req.raw)
    out = SimulateResponse(
        schema_version=body["schema_version"],
        model=body["model"],
        scheme=body["scheme"],
        params=body["params"],
        config=body["config"],
        summary=SummaryOut(**body["summary"]),
        report=ReportOut(**body["report"]) if "report" in body else None,
        warnings=body["warnings"],
    )
    if req.include_paths:
        out.paths = [
            PathOut(
                path=i,
                times=[float(t) for t in p.times],
                prices=[float(x) for x in p.prices],
                variances=None if p.variances is None
                else [float(v) for v in p.variances],
            )
            for i, p in enumerate(paths)
        ]
    return out


def estimate(req: EstimateRequest) -> EstimateResponse:
    """Calibrate model parameters from CSV text."""
    series = data_io.load_prices(req.csv_text.encode("utf-8"), dt=req.dt)
    report = calibrate(series, window=req.window, include_heston=req.include_heston)
    g = report.gbm
    out = EstimateResponse(
        gbm={"mu": g.mu, "sigma": g.sigma, "x0": g.x0},
        standard_errors={k: v for k, v in report.diagnostics.standard_errors.items()
                         if v == v},  # drop NaNs
        warnings=list(report.diagnostics.warnings),
        n_observations=len(series),
    )
    if report.heston is not None:
        h = report.heston
        out.heston = {"mu": h.mu, "kappa": h.kappa, "theta": h.theta,
                      "sigma_v": h.sigma_v, "rho": h.rho, "v0": h.v0, "x0": h.x0}
    return out


def _require(req: CompareRequest, names: list[str]) -> dict:
    missing = [n for n in names if getattr(req, n) is None]
    if missing:
        raise ConfigurationError(
            f"compare needs parameters {missing} unless both simulated ranges are provided"
        )
    return {n: getattr(req, n) for n in names}


def compare(req: CompareRequest) -> CompareResponse:
    """Run (or score) both models against one realized range.

    When both ``gbm_range`` and ``heston_range`` are supplied the
    endpoint errors are computed directly from them and no simulation
    runs; otherwise both models run under one seed, coupled by default.
    """
    if req.exact_low > req.exact_high:
        raise ConfigurationError(
            f"exact_low must be <= exact_high, got [{req.exact_low}, {req.exact_high}]"
        )
    warnings: list[str] = []
    if req.gbm_range is not None and req.heston_range is not None:
        entries = {}
        for name, rng in (("gbm", req.gbm_range), ("heston", req.heston_range)):
            rep = RangeErrorReport.from_bounds(rng.low, rng.high,
                                               req.exact_low, req.exact_high)
            entries[name] = ModelComparison(
                source="provided", simulated_low=rep.simulated_low,
                simulated_high=rep.simulated_high, width=rep.width,
                abs_error_low=rep.abs_error_low, abs_error_high=rep.abs_error_high,
            )
        return CompareResponse(
            exact_low=req.exact_low, exact_high=req.exact_high, coupled=req.coupled,
            seed=req.config.seed, heston=entries["heston"], gbm=entries["gbm"],
        )
    shared = _require(req, ["mu", "x0"])
    gbm_params = GbmParams(**shared, **_require(req, ["sigma"]))
    heston_params = HestonParams(
        **shared, **_require(req, ["kappa", "theta", "sigma_v", "rho", "v0"])
    )
    warnings.extend(heston_params.warnings)
    config = SimulationConfig(**req.config.model_dump())
    result = compare_models(gbm_params, heston_params, config,
                            req.exact_low, req.exact_high, coupled=req.coupled)
    entries = {}
    for name, rep in (("gbm", result.gbm_report), ("heston", result.heston_report)):
        entries[name] = ModelComparison(
            source="simulated", simulated_low=rep.simulated_low,
            simulated_high=rep.simulated_high, width=rep.width,
            abs_error_low=rep.abs_error_low, abs_error_high=rep.abs_error_high,
        )
    return CompareResponse(
        exact_low=req.exact_low, exact_high=req.exact_high, coupled=result.coupled,
        seed=config.seed, heston=entries["heston"], gbm=entries["gbm"],
        warnings=warnings,
    )

"""N-path Monte Carlo experiments with deterministic, order-free results.

Path ``i`` always draws from substream ``(seed, i)``, so results are
bit-identical whether paths run sequentially or fanned out over any
number of worker threads, and chunks merge back by path index. The
``STOCHPATH_THREADS`` environment variable caps worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError
from .models import (
    GbmParams,
    HestonParams,
    PricePath,
    gbm_em_values,
    gbm_exact_values,
    heston_values,
    time_grid,
)
from .rng import mix64, normal_matrix

#: scheme name -> (parameter type, normal draws consumed per step)
SCHEMES = {
    "gbm-exact": (GbmParams, 1),
    "gbm-em": (GbmParams, 1),
    "heston-em": (HestonParams, 2),
}

QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99)

_CHUNK = 4096


@dataclass(frozen=True)
class SimulationConfig:
    """Experiment size and seeding; fully determines a run."""

    n_paths: int
    n_steps: int = 1
    horizon: float = 1.0 / 252.0
    seed: int = 0

    def __post_init__(self):
        if not self.n_paths >= 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.n_steps >= 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class SimulationSummary:
    """Statistics over terminal prices (or all grid prices, if requested).

    Quantiles use linear interpolation of order statistics; the std is
    the sample standard deviation (ddof=1), defined as 0 for one value.
    ``truncation_events`` is None for GBM schemes.
    """

    terminal_min: float
    terminal_max: float
    terminal_mean: float
    terminal_std: float
    quantiles: dict = field(default_factory=dict)
    truncation_events: int | None = None


@dataclass(frozen=True)
class RangeErrorReport:
    """Simulated [low, high] range vs. the realized range, with endpoint errors.

    ``abs_error_low``/``abs_error_high`` are the absolute differences of
    the corresponding endpoints (low vs. low, high vs. high).
    """

    simulated_low: float
    simulated_high: float
    exact_low: float
    exact_high: float
    abs_error_low: float
    abs_error_high: float

    @classmethod
    def from_bounds(cls, simulated_low: float, simulated_high: float,
                    exact_low: float, exact_high: float) -> "RangeErrorReport":
        if exact_low > exact_high:
            raise DomainError(
                f"exact_low must be <= exact_high, got [{exact_low}, {exact_high}]"
            )
        return cls(
            simulated_low=simulated_low,
            simulated_high=simulated_high,
            exact_low=exact_low,
            exact_high=exact_high,
            abs_error_low=abs(simulated_low - exact_low),
            abs_error_high=abs(simulated_high - exact_high),
        )

    @property
    def width(self) -> float:
        return self.simulated_high - self.simulated_low


class SimulationResult(NamedTuple):
    paths: list[PricePath]
    summary: SimulationSummary


@dataclass(frozen=True)
class ComparisonResult:
    """Side-by-side run of both models on shared drift and initial price."""

    gbm_summary: SimulationSummary
    heston_summary: SimulationSummary
    gbm_report: RangeErrorReport | None
    heston_report: RangeErrorReport | None
    coupled: bool


def resolve_workers(workers: int | None = None) -> int:
    """Requested worker count, capped by the STOCHPATH_THREADS env var."""
    env = os.environ.get("STOCHPATH_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"STOCHPATH_THREADS must be an integer, got {env!r}")
    w = workers if workers is not None else (cap if cap is not None else 1)
    if w < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    return min(w, cap) if cap is not None else w


def _summary_from_values(values: np.ndarray, truncation_events: int | None) -> SimulationSummary:
    qs = np.quantile(values, QUANTILE_LEVELS, method="linear")
    quantiles = {f"{int(q * 100)}%": float(v) for q, v in zip(QUANTILE_LEVELS, qs)}
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return SimulationSummary(
        terminal_min=float(values.min()),
        terminal_max=float(values.max()),
        terminal_mean=float(values.mean()),
        terminal_std=std,
        quantiles=quantiles,
        truncation_events=truncation_events,
    )


def summarize(paths: list[PricePath], whole_path: bool = False) -> SimulationSummary:
    """Summary statistics over a path collection.

    By default statistics cover terminal prices; with ``whole_path`` they
    cover every grid point of every path (with one daily step the two
    coincide).
    """
    if not paths:
        raise DomainError("cannot summarize an empty path collection")
    grid = paths[0].times
    for p in paths[1:]:
        if p.times.shape != grid.shape or not np.array_equal(p.times, grid):
            raise DomainError("all paths must share one time grid")
    if whole_path:
        values = np.concatenate([p.prices for p in paths])
    else:
        values = np.array([p.prices[-1] for p in paths])
    if all(p.variances is not None for p in paths):
        truncation_events = int(sum(p.truncations for p in paths))
    else:
        truncation_events = None
    return _summary_from_values(values, truncation_events)


def range_error(summary: SimulationSummary, exact_low: float,
                exact_high: float) -> RangeErrorReport:
    """Endpoint absolute errors of the simulated range against a realized range."""
    return RangeErrorReport.from_bounds(
        summary.terminal_min, summary.terminal_max, exact_low, exact_high
    )


def _check_scheme(params, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ConfigurationError(
            f"unknown scheme {scheme!r}; expected one of {sorted(SCHEMES)}"
        )
    want, _ = SCHEMES[scheme]
    if not isinstance(params, want):
        raise ConfigurationError(
            f"scheme {scheme!r} requires {want.__name__}, got {type(params).__name__}"
        )


def _chunk_values(params, config: SimulationConfig, scheme: str, times: np.ndarray,
                  lo: int, hi: int, coupled_gbm: bool = False):
    """Simulate paths [lo, hi); returns (prices, variances|None, truncations|None)."""
    idx = np.arange(lo, hi, dtype=np.uint64)
    n = config.n_steps
    if scheme == "heston-em":
        draws = normal_matrix(config.seed, idx, 2 * n).reshape(len(idx), n, 2)
        return heston_values(params, times, draws)
    if coupled_gbm:
        # consume the same g1 column a Heston run sees, for coupled comparisons
        draws = normal_matrix(config.seed, idx, 2 * n).reshape(len(idx), n, 2)[..., 0]
    else:
        draws = normal_matrix(config.seed, idx, n)
    if scheme == "gbm-exact":
        return gbm_exact_values(params, times, draws), None, None
    return gbm_em_values(params, times, draws), None, None


def _run(params, config: SimulationConfig, scheme: str, workers: int,
         path_cap: int, whole_path: bool, coupled_gbm: bool = False) -> SimulationResult:
    times = time_grid(config.horizon, config.n_steps)
    bounds = [(lo, min(lo + _CHUNK, config.n_paths))
              for lo in range(0, config.n_paths, _CHUNK)]

    def work(span):
        return _chunk_values(params, config, scheme, times, *span, coupled_gbm=coupled_gbm)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, bounds))
    else:
        chunks = [work(span) for span in bounds]

    paths: list[PricePath] = []
    summary_values = []
    truncation_total = 0
    heston = scheme == "heston-em"
    for (lo, hi), (prices, variances, truncations) in zip(bounds, chunks):
        summary_values.append(
            prices.reshape(hi - lo, -1) if whole_path else prices[..., -1]
        )
        if heston:
            truncation_total += int(truncations.sum())
        for i in range(min(hi, path_cap) - lo):
            paths.append(PricePath(
                times, prices[i],
                variances[i] if heston else None,
                int(truncations[i]) if heston else 0,
            ))
    values = np.concatenate([np.ravel(v) for v in summary_values])
    summary = _summary_from_values(values, truncation_total if heston else None)
    return SimulationResult(paths, summary)


def run_simulation(params, config: SimulationConfig, scheme: str, *,
                   workers: int | None = None, path_cap: int = 10_000,
                   whole_path: bool = False) -> SimulationResult:
    """Run an ``n_paths`` Monte Carlo experiment.

    ``scheme`` is one of ``gbm-exact``, ``gbm-em`` or ``heston-em`` and
    must match the parameter type. At most ``path_cap`` paths are kept in
    the result (``path_cap=0`` for summary-only runs); the summary always
    covers all paths. Output is independent of ``workers``.
    """
    _check_scheme(params, scheme)
    return _run(params, config, scheme, resolve_workers(workers),
                max(0, path_cap), whole_path)


def compare_models(gbm_params: GbmParams, heston_params: HestonParams,
                   config: SimulationConfig, exact_low: float | None = None,
                   exact_high: float | None = None, *, coupled: bool = True,
                   workers: int | None = None) -> ComparisonResult:
    """Run both models head to head under one configuration.

    With ``coupled=True`` (default) the GBM price shock reuses the g1
    draw of the Heston pair at every step of every path, which removes
    most Monte Carlo noise from the comparison; note the coupled GBM
    numbers therefore differ from a standalone ``gbm-em`` run at the same
    seed. With ``coupled=False`` the GBM run draws from the independent
    seed ``mix64(seed)``, echoed nowhere else, so the two models share
    nothing.
    """
    w = resolve_workers(workers)
    heston_result = _run(heston_params, config, "heston-em", w, 0, False)
    if coupled:
        gbm_result = _run(gbm_params, config, "gbm-em", w, 0, False, coupled_gbm=True)
    else:
        gbm_config = SimulationConfig(config.n_paths, config.n_steps,
                                      config.horizon, mix64(config.seed))
        gbm_result = _run(gbm_params, gbm_config, "gbm-em", w, 0, False)
    if exact_low is not None and exact_high is not None:
        gbm_report = range_error(gbm_result.summary, exact_low, exact_high)
        heston_report = range_error(heston_result.summary, exact_low, exact_high)
    else:
        gbm_report = heston_report = None
    return ComparisonResult(
        gbm_summary=gbm_result.summary,
        heston_summary=heston_result.summary,
        gbm_report=gbm_report,
        heston_report=heston_report,
        coupled=coupled,
    )

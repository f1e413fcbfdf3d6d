"""Price dynamics: GBM (exact and Euler-Maruyama) and Heston (Euler-Maruyama).

The Heston scheme applies full truncation: ``max(v, 0)`` enters both
square roots and the stored variance, and every truncation event is
counted rather than hidden. For testability every path operation accepts
either a :class:`~stochpath.rng.RandomStream` or an explicit ``draws``
array, so degenerate cases (forced zero noise, shared increments) are
directly assertable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .rng import RandomStream, correlated_pair


@dataclass(frozen=True)
class GbmParams:
    """Geometric Brownian motion parameters, annualized.

    mu: drift per year; sigma: volatility per sqrt(year); x0: initial price.
    """

    mu: float
    sigma: float
    x0: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be > 0, got {self.x0}")

    @property
    def warnings(self) -> tuple[str, ...]:
        return ()


@dataclass(frozen=True)
class HestonParams:
    """Heston stochastic-volatility parameters, annualized.

    mu: price drift per year; kappa: variance mean-reversion rate per
    year; theta: long-run variance level; sigma_v: volatility of
    variance per sqrt(year); rho: correlation of the two driving
    shocks; v0: initial variance; x0: initial price.

    ``theta`` is accepted with either sign; a negative value is
    well-defined under the truncated scheme but drives variance to zero,
    so it is flagged in :attr:`warnings` instead of being rejected.
    """

    mu: float
    kappa: float
    theta: float
    sigma_v: float
    rho: float
    v0: float
    x0: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must satisfy |rho| <= 1, got {self.rho}")
        if not self.v0 >= 0:
            raise DomainError(f"v0 must be >= 0, got {self.v0}")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be > 0, got {self.x0}")
        if not self.kappa >= 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if not self.sigma_v >= 0:
            raise DomainError(f"sigma_v must be >= 0, got {self.sigma_v}")

    @property
    def warnings(self) -> tuple[str, ...]:
        if self.theta < 0:
            return (
                f"long-run variance theta={self.theta} is negative; variance paths "
                "will be pulled to zero and truncation events should be expected",
            )
        return ()


@dataclass(eq=False)
class PricePath:
    """One simulated trajectory on a uniform time grid.

    ``times`` has length ``n_steps + 1`` with ``times[0] == 0``;
    ``prices`` matches it, ``prices[0]`` is the generating ``x0``.
    ``variances`` is present for Heston paths only and stores the
    post-truncation values; ``truncations`` counts how often the raw
    variance update went negative along the path.
    """

    times: np.ndarray
    prices: np.ndarray
    variances: np.ndarray | None = None
    truncations: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.prices = np.asarray(self.prices, dtype=np.float64)
        if self.times.shape != self.prices.shape:
            raise DomainError("times and prices must have equal length")
        if self.times.size < 2 or self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("times must start at 0 and be strictly increasing")
        if self.variances is not None:
            self.variances = np.asarray(self.variances, dtype=np.float64)
            if self.variances.shape != self.times.shape:
                raise DomainError("variances must match the time grid")
            if np.any(self.variances < 0):
                raise DomainError("stored variances must be non-negative")

    @property
    def terminal(self) -> float:
        return float(self.prices[-1])


class HestonStep(NamedTuple):
    """Result of one Heston Euler-Maruyama step."""

    price: float | np.ndarray
    variance: float | np.ndarray
    truncated: bool | np.ndarray


def gbm_em_step(x, params: GbmParams, dt: float, z):
    """One Euler-Maruyama step of GBM: ``x + mu*x*dt + sigma*x*sqrt(dt)*z``."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return x + params.mu * x * dt + params.sigma * x * math.sqrt(dt) * z


def heston_em_step(x, v, params: HestonParams, dt: float, z1, z2) -> HestonStep:
    """One fully truncated Euler-Maruyama step of the Heston pair.

    ``z1``/``z2`` must already carry the model correlation (see
    :func:`~stochpath.rng.correlated_pair`). With ``vp = max(v, 0)``:

        price'    = x + mu*x*dt + sqrt(vp)*x*sqrt(dt)*z1
        v_raw     = v + kappa*(theta - v)*dt + sigma_v*sqrt(vp*dt)*z2
        variance' = max(v_raw, 0)

    ``truncated`` reports whether ``v_raw`` went negative. The price
    update uses the same arithmetic order as :func:`gbm_em_step`, so the
    degenerate model (sigma_v=0, v0=theta) reproduces GBM bitwise.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    vp = np.maximum(v, 0.0)
    x_next = x + params.mu * x * dt + np.sqrt(vp) * x * math.sqrt(dt) * z1
    v_raw = v + params.kappa * (params.theta - v) * dt + params.sigma_v * np.sqrt(vp * dt) * z2
    truncated = v_raw < 0
    v_next = np.maximum(v_raw, 0.0)
    if np.ndim(x_next) == 0 and np.ndim(v_next) == 0:
        return HestonStep(float(x_next), float(v_next), bool(truncated))
    return HestonStep(x_next, v_next, truncated)


def time_grid(horizon: float, n_steps: int) -> np.ndarray:
    """Uniform grid 0 .. horizon with ``n_steps`` steps of ``horizon/n_steps``."""
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if not n_steps >= 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    return np.linspace(0.0, horizon, n_steps + 1)


def gbm_exact_values(params: GbmParams, times: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Exact-solution GBM prices for one draw vector or a (paths, steps) matrix.

    ``prices[k] = x0 * exp((mu - sigma^2/2) * t_k + sigma * W_k)`` where
    ``W`` accumulates ``sqrt(dt)``-scaled draws, so log-increments are
    i.i.d. normal with mean ``(mu - sigma^2/2)*dt`` and variance
    ``sigma^2*dt``.
    """
    dt = float(times[1] - times[0])
    w = np.cumsum(math.sqrt(dt) * draws, axis=-1)
    log_path = (params.mu - 0.5 * params.sigma ** 2) * times[1:] + params.sigma * w
    prices = np.empty(draws.shape[:-1] + (times.size,))
    prices[..., 0] = params.x0
    prices[..., 1:] = params.x0 * np.exp(log_path)
    return prices


def gbm_em_values(params: GbmParams, times: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Euler-Maruyama GBM prices; same shapes as :func:`gbm_exact_values`."""
    dt = float(times[1] - times[0])
    n_steps = times.size - 1
    prices = np.empty(draws.shape[:-1] + (times.size,))
    x = np.broadcast_to(np.float64(params.x0), draws.shape[:-1]).copy()
    prices[..., 0] = x
    for k in range(n_steps):
        x = gbm_em_step(x, params, dt, draws[..., k])
        prices[..., k + 1] = x
    return prices


def heston_values(params: HestonParams, times: np.ndarray,
                  draws: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Heston prices and truncated variances from raw normal pairs.

    ``draws[..., k, 0]`` and ``draws[..., k, 1]`` are the independent
    normals of step ``k``; the model correlation is applied here.
    Returns ``(prices, variances, truncation_counts)``.
    """
    dt = float(times[1] - times[0])
    n_steps = times.size - 1
    z1, z2 = correlated_pair(params.rho, draws[..., 0], draws[..., 1])
    lead = draws.shape[:-2]
    prices = np.empty(lead + (times.size,))
    variances = np.empty(lead + (times.size,))
    x = np.broadcast_to(np.float64(params.x0), lead).copy()
    v = np.broadcast_to(np.float64(params.v0), lead).copy()
    prices[..., 0] = x
    variances[..., 0] = v
    truncations = np.zeros(lead, dtype=np.int64)
    for k in range(n_steps):
        x, v, truncated = heston_em_step(x, v, params, dt, z1[..., k], z2[..., k])
        prices[..., k + 1] = x
        variances[..., k + 1] = v
        truncations += truncated
    return prices, variances, truncations


def _resolve_draws(stream: RandomStream | None, draws, n_steps: int,
                   per_step: int) -> np.ndarray:
    if (stream is None) == (draws is None):
        raise DomainError("provide exactly one of stream= or draws=")
    if draws is None:
        flat = stream.normals(n_steps * per_step)
        return flat.reshape(n_steps, per_step) if per_step > 1 else flat
    draws = np.asarray(draws, dtype=np.float64)
    want = (n_steps, per_step) if per_step > 1 else (n_steps,)
    if draws.shape != want:
        raise DomainError(f"draws must have shape {want}, got {draws.shape}")
    return draws


def gbm_exact_path(params: GbmParams, n_steps: int, horizon: float,
                   stream: RandomStream | None = None, draws=None) -> PricePath:
    """Sample one exact GBM path on a uniform grid.

    One normal draw is consumed per step. ``draws`` (shape ``(n_steps,)``)
    may replace the stream to force specific increments.
    """
    times = time_grid(horizon, n_steps)
    z = _resolve_draws(stream, draws, n_steps, 1)
    return PricePath(times, gbm_exact_values(params, times, z))


def gbm_em_path(params: GbmParams, n_steps: int, horizon: float,
                stream: RandomStream | None = None, draws=None) -> PricePath:
    """Sample one Euler-Maruyama GBM path on a uniform grid."""
    times = time_grid(horizon, n_steps)
    z = _resolve_draws(stream, draws, n_steps, 1)
    return PricePath(times, gbm_em_values(params, times, z))


def heston_path(params: HestonParams, n_steps: int, horizon: float,
                stream: RandomStream | None = None, draws=None) -> PricePath:
    """Sample one Heston path, storing prices and truncated variances.

    Each step consumes an (g1, g2) pair, drawn interleaved from the
    stream (g1 first), then correlated with ``params.rho``. ``draws``
    (shape ``(n_steps, 2)``) may replace the stream.
    """
    times = time_grid(horizon, n_steps)
    g = _resolve_draws(stream, draws, n_steps, 2)
    prices, variances, truncations = heston_values(params, times, g)
    return PricePath(times, prices, variances, int(truncations))

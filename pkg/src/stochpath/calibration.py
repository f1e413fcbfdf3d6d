"""Parameter estimation from historical close prices.

GBM parameters come from the exact log-return likelihood moments:
``sigma = std(log returns)/sqrt(dt)`` and ``mu = mean(log returns)/dt
+ sigma^2/2`` (so the fitted drift matches the process mean, not the
log mean).

Heston parameters use method-of-moments on the squared-return series,
which is what daily closes can actually identify; the latent variance is
never filtered:

* ``theta``: sample variance of log returns over ``dt``.
* ``kappa``: the autocovariance of squared demeaned returns decays like
  ``phi^lag`` with ``phi = 1 - kappa*dt``; ``phi`` solves the ratio of
  the autocovariance mass over a long horizon (``6*window`` lags) to the
  mass over a short horizon (``window`` lags).
* ``sigma_v``: from the stationary-variance identity
  ``Var(v) = sigma_v^2*theta*dt/(1-phi^2)``, with ``Var(v)`` read off
  the fourth moment of returns (``E[e^4] = 3*E[v^2]*dt^2``).
* ``rho``: the cross-covariance of a return with later squared returns
  scales as ``rho*sigma_v*theta*dt^2*phi^(lag-1)``; its amplitude is
  fitted over ``3*window`` lags and rescaled, after removing the small
  leakage of the ``-v/2`` drift term analytically.

These estimators are consistent but, like every moment estimator for a
latent-variance model, noisy: on a 10^4-step daily series at kappa=2,
theta=0.04, sigma_v=0.3, rho=-0.5 they scatter with roughly sd(kappa)
~= 0.7, sd(theta) ~= 0.004 and sd(rho) ~= 0.11. Reported standard
errors for kappa and rho come from batch-means over four subseries and
are indicative, not exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import DomainError, EstimationError
from .models import GbmParams, HestonParams

TRADING_DAYS_PER_YEAR = 252


@dataclass(eq=False)
class HistoricalSeries:
    """Dated close prices with an implied uniform step of ``dt`` years.

    Calendar gaps are ignored: each row is one trading step (252 steps
    per year by default).
    """

    dates: tuple[date, ...]
    closes: np.ndarray
    dt: float = 1.0 / TRADING_DAYS_PER_YEAR

    def __post_init__(self):
        self.dates = tuple(self.dates)
        self.closes = np.asarray(self.closes, dtype=np.float64)
        if len(self.dates) != self.closes.size:
            raise DomainError("dates and closes must have equal length")
        if self.closes.size < 2:
            raise DomainError(f"need at least 2 observations, got {self.closes.size}")
        if np.any(self.closes <= 0):
            bad = int(np.argmax(self.closes <= 0))
            raise DomainError(f"close prices must be positive (index {bad})")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DomainError("dates must be strictly increasing")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return self.closes.size

    @property
    def log_returns(self) -> np.ndarray:
        return np.diff(np.log(self.closes))

    @property
    def last_close(self) -> float:
        return float(self.closes[-1])


@dataclass(frozen=True)
class CalibrationDiagnostics:
    """Indicative standard errors plus any warnings raised while fitting."""

    standard_errors: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class CalibrationReport:
    gbm: GbmParams
    heston: HestonParams | None
    diagnostics: CalibrationDiagnostics


def estimate_gbm(series: HistoricalSeries) -> GbmParams:
    """Fit GBM drift and volatility; ``x0`` is the last close.

    With a single return the dispersion is unmeasurable and sigma is 0.
    """
    r = series.log_returns
    if r.size < 1:
        raise DomainError("need at least 2 closes to estimate GBM parameters")
    dt = series.dt
    sigma = float(np.std(r, ddof=1) / math.sqrt(dt)) if r.size > 1 else 0.0
    mu = float(r.mean() / dt + 0.5 * sigma * sigma)
    return GbmParams(mu=mu, sigma=sigma, x0=series.last_close)


def gbm_standard_errors(series: HistoricalSeries) -> dict:
    """Asymptotic standard errors of the GBM estimates."""
    r = series.log_returns
    m = r.size
    dt = series.dt
    sigma = float(np.std(r, ddof=1) / math.sqrt(dt)) if m > 1 else 0.0
    se_sigma = sigma / math.sqrt(2.0 * (m - 1)) if m > 1 else float("nan")
    se_mu = math.sqrt(sigma ** 2 / (m * dt) + sigma ** 4 / (2.0 * (m - 1))) if m > 1 else float("nan")
    return {"mu": se_mu, "sigma": se_sigma}


def rolling_variance(series: HistoricalSeries, window: int) -> np.ndarray:
    """Trailing sample variance of log returns over ``window``, per year.

    Value ``k`` covers returns ``k .. k+window-1``. A window with zero
    variance (a constant price stretch) is an estimation error because
    every variance-proxy statistic downstream degenerates there.
    """
    if window < 5:
        raise DomainError(f"window must be >= 5, got {window}")
    r = series.log_returns
    if r.size < window:
        raise DomainError(
            f"need at least window+1 closes ({window + 1}), got {len(series)}"
        )
    c1 = np.concatenate([[0.0], np.cumsum(r)])
    c2 = np.concatenate([[0.0], np.cumsum(r * r)])
    s1 = c1[window:] - c1[:-window]
    s2 = c2[window:] - c2[:-window]
    var = (s2 - s1 * s1 / window) / (window - 1)
    var = np.maximum(var, 0.0)  # guard fp cancellation
    if np.any(var == 0):
        k = int(np.argmax(var == 0))
        raise EstimationError(
            f"zero-variance window over returns {k}..{k + window - 1}; "
            "constant prices carry no volatility information"
        )
    return var / series.dt


def _lagged_covariances(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """Cov(a_t, b_{t+l}) for l = 1..max_lag; inputs already centred."""
    m = a.size
    return np.array([np.dot(a[:-l], b[l:]) / (m - l) for l in range(1, max_lag + 1)])


def _solve_decay(ratio: float, q1: int, q2: int) -> float:
    """phi in (0,1) with (1-phi^q2)/(1-phi^q1) equal to ``ratio``."""
    if ratio >= q2 / q1:
        return 1.0 - 1e-6
    lo, hi = 1e-9, 1.0 - 1e-9
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if (1.0 - mid ** q2) / (1.0 - mid ** q1) > ratio:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _moment_fit(r: np.ndarray, dt: float, window: int) -> tuple[float, float, float, float, bool]:
    """Core moment fit on a return vector.

    Returns ``(kappa, theta, sigma_v, rho, degenerate)`` where degenerate
    means the squared-return autocovariance mass was not distinguishable
    from zero and the variance dynamics were left unidentified.
    """
    m = r.size
    e = r - r.mean()
    theta = float(e.var(ddof=1) / dt)
    s = e * e
    sc = s - s.mean()
    var_s = float(sc.var(ddof=1))

    q1 = window
    q2 = min(6 * window, m - 2)
    lc = min(3 * window, m - 2)
    if q2 <= q1 or var_s == 0:
        return 0.0, theta, 0.0, 0.0, True

    gamma = _lagged_covariances(sc, sc, q2)
    mass_short = float(gamma[:q1].sum())
    mass_long = float(gamma.sum())
    if mass_short <= 2.0 * var_s * math.sqrt(q1 / m) or mass_long <= mass_short:
        return 0.0, theta, 0.0, 0.0, True

    phi = _solve_decay(mass_long / mass_short, q1, q2)
    kappa = float(np.clip((1.0 - phi) / dt, 0.0, 1.0 / dt))

    # Var(v) from the fourth moment: E[e^4] = 3 E[v^2] dt^2.
    var_v = max(float(np.mean(e ** 4)) / (3.0 * dt * dt) - theta * theta, 0.0)
    sigma_v = math.sqrt(var_v * (1.0 - phi * phi) / (theta * dt)) if theta > 0 else 0.0

    cross = _lagged_covariances(e, sc, lc)
    weights = phi ** np.arange(lc)
    amplitude = float(np.dot(cross, weights) / np.dot(weights, weights))
    amplitude += 0.5 * phi * var_v * dt * dt  # remove the -v/2 drift leakage
    denom = sigma_v * theta * dt * dt
    rho = float(np.clip(amplitude / denom, -1.0, 1.0)) if denom > 0 else 0.0
    return kappa, theta, sigma_v, rho, False


def estimate_heston(series: HistoricalSeries, window: int = 21) -> HestonParams:
    """Fit Heston parameters from close prices alone (see module docstring).

    ``window`` sets the short autocovariance horizon (long horizon
    ``6*window``, cross-covariance horizon ``3*window``) and the
    rolling-variance window behind ``v0``. When the squared-return
    autocovariance mass is statistically indistinguishable from zero the
    variance process is unidentifiable and the degenerate fit
    ``kappa=0, sigma_v=0, rho=0`` is returned (theta still estimates the
    constant variance).
    """
    params, _ = _estimate_heston_full(series, window)
    return params


def _estimate_heston_full(series: HistoricalSeries,
                          window: int) -> tuple[HestonParams, CalibrationDiagnostics]:
    if len(series) < 30:
        raise DomainError(
            f"need at least 30 closes for Heston estimation, got {len(series)}"
        )
    if window < 5:
        raise DomainError(f"window must be >= 5, got {window}")
    if len(series) < window + 2:
        raise DomainError(
            f"need at least window+2 closes ({window + 2}), got {len(series)}"
        )
    dt = series.dt
    r = series.log_returns
    m = r.size
    warnings: list[str] = []

    vhat = rolling_variance(series, window)  # also raises on zero-variance windows
    v0 = float(vhat[-1])

    kappa, theta, sigma_v, rho, degenerate = _moment_fit(r, dt, window)
    if degenerate:
        warnings.append(
            "variance autocovariance indistinguishable from zero; returning the "
            "degenerate fit kappa=0, sigma_v=0, rho=0"
        )
    if kappa == 1.0 / dt:
        warnings.append("mean reversion faster than one step; kappa capped at 1/dt")
    if sigma_v == 0.0 and not degenerate:
        warnings.append("sigma_v estimate is zero; correlation unidentifiable")
    if theta < 0:
        warnings.append(f"fitted long-run variance theta={theta:.6g} is negative")

    # theta: HAC (Bartlett) error of the mean squared return
    e = r - r.mean()
    sc = e * e - (e * e).mean()
    q2 = min(6 * window, m - 2)
    lrv = float(sc.var(ddof=1))
    if not degenerate:
        gamma = _lagged_covariances(sc, sc, q2)
        lrv += 2.0 * float(np.sum((1.0 - np.arange(1, q2 + 1) / m) * gamma))
    se_theta = math.sqrt(max(lrv, 0.0) / m) / dt

    # kappa, rho: batch-means over four subseries (indicative only)
    se_kappa = se_rho = float("nan")
    n_batches = 4
    if not degenerate and m >= n_batches * (6 * window + 2):
        sub = [
            _moment_fit(chunk, dt, window)
            for chunk in np.array_split(r, n_batches)
        ]
        ks = np.array([f[0] for f in sub])
        rs = np.array([f[3] for f in sub])
        se_kappa = float(ks.std(ddof=1) / math.sqrt(n_batches))
        se_rho = float(rs.std(ddof=1) / math.sqrt(n_batches))

    params = HestonParams(
        mu=float(r.mean() / dt + 0.5 * max(theta, 0.0)),
        kappa=kappa,
        theta=theta,
        sigma_v=sigma_v,
        rho=rho,
        v0=v0,
        x0=series.last_close,
    )
    diagnostics = CalibrationDiagnostics(
        standard_errors={"theta": se_theta, "kappa": se_kappa, "rho": se_rho},
        warnings=tuple(warnings) + params.warnings,
    )
    return params, diagnostics


def calibrate(series: HistoricalSeries, window: int = 21,
              include_heston: bool = True) -> CalibrationReport:
    """GBM estimate plus, when requested and feasible, a Heston estimate.

    Heston estimation failures on short or degenerate data do not abort
    the report; they surface as a warning with ``heston=None``.
    """
    gbm = estimate_gbm(series)
    errors = gbm_standard_errors(series)
    heston = None
    warnings: tuple[str, ...] = ()
    if include_heston:
        try:
            heston, hdiag = _estimate_heston_full(series, window)
            errors = {**errors, **hdiag.standard_errors}
            warnings = hdiag.warnings
        except (DomainError, EstimationError) as exc:
            warnings = (f"heston estimation skipped: {exc}",)
    return CalibrationReport(
        gbm=gbm,
        heston=heston,
        diagnostics=CalibrationDiagnostics(standard_errors=errors, warnings=warnings),
    )

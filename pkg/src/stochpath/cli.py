"""Command-line client for the simulation service.

Subcommands build the same request models the HTTP endpoints accept and
call the shared handlers in-process, so a CLI run and a service call
with equal inputs produce identical results. ``stochpath serve`` starts
the HTTP service itself.

Exit codes: 0 success; 2 usage or configuration errors; 3 data or
estimation errors; 4 I/O errors.
"""
from __future__ import annotations

import secrets
import sys
from pathlib import Path

import click

from . import data_io
from .errors import (
    EXIT_DATA,
    EXIT_IO,
    EXIT_USAGE,
    ConfigurationError,
    DataIoError,
    DomainError,
    EstimationError,
)
from .service import handlers
from .service.schemas import (
    CompareRequest,
    EstimateRequest,
    RangeIn,
    SimConfigIn,
    SimulateRequest,
)

_GBM_FIELDS = ("mu", "sigma", "x0")
_HESTON_FIELDS = ("mu", "kappa", "theta", "sigma_v", "rho", "v0", "x0")


class _Cli(click.Group):
    """Group that maps stochpath errors onto documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DomainError, ConfigurationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_USAGE)
        except (DataIoError, EstimationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)


@click.group(cls=_Cli, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option()
def main():
    """Monte Carlo price-range forecasting with GBM and Heston dynamics."""


def _write_output(data: bytes, output: str | None):
    if output is None or output == "-":
        sys.stdout.write(data.decode("utf-8"))
    else:
        Path(output).write_bytes(data)


def _param_options(fields):
    """Attach model parameter override options (annualized rates)."""
    decls = {
        "mu": (["--mu", "--r", "mu"], "drift / rate of return per year"),
        "sigma": (["--sigma"], "GBM volatility per sqrt(year)"),
        "x0": (["--x0"], "initial price"),
        "kappa": (["--kappa"], "variance mean-reversion rate per year"),
        "theta": (["--theta"], "long-run variance level"),
        "sigma_v": (["--sigma-v", "sigma_v"], "volatility of variance per sqrt(year)"),
        "rho": (["--rho"], "correlation of price and variance shocks"),
        "v0": (["--v0"], "initial variance"),
    }

    def wrap(fn):
        for name in reversed(fields):
            args, help_text = decls[name]
            fn = click.option(*args, type=float, default=None, help=help_text)(fn)
        return fn

    return wrap


def _config_options(fn):
    fn = click.option("--n-paths", type=int, default=10_000, show_default=True,
                      help="number of Monte Carlo paths")(fn)
    fn = click.option("--n-steps", type=int, default=1, show_default=True,
                      help="time steps per path")(fn)
    fn = click.option("--horizon", type=float, default=1.0 / 252.0,
                      show_default="1/252", help="forecast horizon in years")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="64-bit simulation seed")(fn)
    fn = click.option("--random-seed", is_flag=True,
                      help="draw the seed from system entropy (echoed in output)")(fn)
    return fn


def _effective_params(model: str, input_path: str | None, window: int,
                      overrides: dict) -> dict:
    """Merge calibrated values (if any) with explicit CLI overrides."""
    fields = _HESTON_FIELDS if model == "heston" else _GBM_FIELDS
    base: dict = {}
    if input_path is not None:
        req = EstimateRequest(csv_text=Path(input_path).read_text(encoding="utf-8"),
                              window=window, include_heston=model == "heston")
        resp = handlers.estimate(req)
        fitted = resp.heston if model == "heston" else resp.gbm
        if fitted is None:
            raise ConfigurationError(
                "calibration produced no heston estimate: " + "; ".join(resp.warnings)
            )
        base = {k: fitted[k] for k in fields}
    params = dict(base)
    for k in fields:
        if overrides.get(k) is not None:
            params[k] = overrides[k]
    missing = [k for k in fields if k not in params]
    if missing:
        raise ConfigurationError(
            f"missing {model} parameters {missing}; pass flags or --input for calibration"
        )
    return params


def _resolve_seed(seed: int, random_seed: bool) -> int:
    return secrets.randbits(64) if random_seed else seed


@main.command()
@click.argument("input", type=click.Path(dir_okay=False))
@click.option("--window", type=int, default=21, show_default=True,
              help="rolling window for the variance proxy")
@click.option("--heston/--no-heston", "include_heston", default=True,
              show_default=True, help="also fit the Heston model")
@click.option("--dt", type=float, default=1.0 / 252.0, show_default="1/252",
              help="years per observation row")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="write to file instead of stdout")
def estimate(input, window, include_heston, dt, fmt, output):
    """Estimate model parameters from a close-price CSV."""
    req = EstimateRequest(csv_text=Path(input).read_text(encoding="utf-8"),
                          window=window, include_heston=include_heston, dt=dt)
    resp = handlers.estimate(req)
    if fmt == "json":
        _write_output((resp.model_dump_json(indent=2, exclude_none=True) + "\n").encode(),
                      output)
        return
    lines = [f"observations: {resp.n_observations}", "gbm:"]
    lines += [f"  {k:8s} {v:.6g}" for k, v in resp.gbm.items()]
    if resp.heston is not None:
        lines.append("heston:")
        lines += [f"  {k:8s} {v:.6g}" for k, v in resp.heston.items()]
    if resp.standard_errors:
        lines.append("standard errors:")
        lines += [f"  {k:8s} {v:.3g}" for k, v in resp.standard_errors.items()]
    for w in resp.warnings:
        lines.append(f"warning: {w}")
    _write_output(("\n".join(lines) + "\n").encode(), output)


@main.command()
@click.option("--model", type=click.Choice(["gbm", "heston"]), required=True)
@click.option("--scheme", type=click.Choice(["exact", "em"]), default="em",
              show_default=True, help="discretization (heston supports em only)")
@click.option("--input", "input_path", type=click.Path(dir_okay=False),
              default=None, help="price CSV to calibrate missing parameters from")
@click.option("--window", type=int, default=21, show_default=True)
@_param_options(_HESTON_FIELDS + ("sigma",))
@_config_options
@click.option("--exact-low", type=float, default=None,
              help="realized range low endpoint for the error report")
@click.option("--exact-high", type=float, default=None,
              help="realized range high endpoint for the error report")
@click.option("--range-over", type=click.Choice(["terminal", "path"]),
              default="terminal", show_default=True,
              help="range statistics over terminal prices or every grid point")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@click.option("--raw", is_flag=True, help="full float fidelity instead of 4 decimals")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--paths-out", type=click.Path(dir_okay=False), default=None,
              help="also dump simulated paths to this CSV")
@click.option("--terminal-only", is_flag=True,
              help="dump one row per path instead of every grid point")
@click.option("--path-cap", type=int, default=10_000, show_default=True,
              help="maximum number of paths kept for the dump")
def simulate(model, scheme, input_path, window, n_paths, n_steps, horizon, seed,
             random_seed, exact_low, exact_high, range_over, fmt, raw, output,
             paths_out, terminal_only, path_cap, **overrides):
    """Run one model and write its result bundle."""
    params = _effective_params(model, input_path, window, overrides)
    req = SimulateRequest(
        model=model, scheme=scheme,
        gbm=params if model == "gbm" else None,
        heston=params if model == "heston" else None,
        config=SimConfigIn(n_paths=n_paths, n_steps=n_steps, horizon=horizon,
                           seed=_resolve_seed(seed, random_seed)),
        exact_low=exact_low, exact_high=exact_high,
        range_over=range_over, include_paths=paths_out is not None,
        path_cap=path_cap, raw=raw,
    )
    bundle, paths = handlers.simulate_bundle(req)
    if paths_out is not None:
        Path(paths_out).write_bytes(data_io.write_paths(paths, terminal_only))
        bundle = data_io.ResultBundle(
            scheme=bundle.scheme, params=bundle.params, config=bundle.config,
            summary=bundle.summary, report=bundle.report, paths_file=paths_out,
        )
    _write_output(data_io.write_summary(bundle, fmt, raw=raw), output)


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False),
              default=None, help="price CSV to calibrate missing parameters from")
@click.option("--window", type=int, default=21, show_default=True)
@_param_options(_HESTON_FIELDS + ("sigma",))
@_config_options
@click.option("--exact-low", type=float, default=None, help="realized range low endpoint")
@click.option("--exact-high", type=float, default=None, help="realized range high endpoint")
@click.option("--gbm-range", type=float, nargs=2, default=None,
              help="bypass: score this simulated GBM range instead of running")
@click.option("--heston-range", type=float, nargs=2, default=None,
              help="bypass: score this simulated Heston range instead of running")
@click.option("--coupled/--independent", default=True, show_default=True,
              help="share the price-shock draws between the two models")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def compare(input_path, window, n_paths, n_steps, horizon, seed, random_seed,
            exact_low, exact_high, gbm_range, heston_range, coupled, fmt, output,
            **overrides):
    """Run both models against one realized range, side by side."""
    if exact_low is None or exact_high is None:
        raise ConfigurationError("compare requires --exact-low and --exact-high")
    bypass = bool(gbm_range) and bool(heston_range)
    fields: dict = {}
    if not bypass:
        heston = _effective_params("heston", input_path, window, overrides)
        gbm = _effective_params("gbm", input_path, window,
                                {**overrides, "mu": heston["mu"], "x0": heston["x0"]})
        fields = {**heston, "sigma": gbm["sigma"]}
    req = CompareRequest(
        **fields,
        config=SimConfigIn(n_paths=n_paths, n_steps=n_steps, horizon=horizon,
                           seed=_resolve_seed(seed, random_seed)),
        exact_low=exact_low, exact_high=exact_high, coupled=coupled,
        gbm_range=RangeIn(low=gbm_range[0], high=gbm_range[1]) if gbm_range else None,
        heston_range=(RangeIn(low=heston_range[0], high=heston_range[1])
                      if heston_range else None),
    )
    resp = handlers.compare(req)
    if fmt == "json":
        _write_output((resp.model_dump_json(indent=2) + "\n").encode(), output)
        return
    rows = [
        ("", "heston", "gbm"),
        ("simulated range",
         f"{resp.heston.simulated_low:.4f} - {resp.heston.simulated_high:.4f}",
         f"{resp.gbm.simulated_low:.4f} - {resp.gbm.simulated_high:.4f}"),
        ("exact range",
         f"{resp.exact_low:.4f} - {resp.exact_high:.4f}",
         f"{resp.exact_low:.4f} - {resp.exact_high:.4f}"),
        ("abs error low", f"{resp.heston.abs_error_low:.4f}", f"{resp.gbm.abs_error_low:.4f}"),
        ("abs error high", f"{resp.heston.abs_error_high:.4f}", f"{resp.gbm.abs_error_high:.4f}"),
        ("width", f"{resp.heston.width:.4f}", f"{resp.gbm.width:.4f}"),
    ]
    lines = [f"{a:16s} {b:22s} {c:22s}".rstrip() for a, b, c in rows]
    lines.append(f"seed: {resp.seed}  coupled: {resp.coupled}  source: {resp.heston.source}")
    for w in resp.warnings:
        lines.append(f"warning: {w}")
    _write_output(("\n".join(lines) + "\n").encode(), output)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

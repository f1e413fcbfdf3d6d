"""CSV ingestion and result serialization.

Price files are two-column CSV (``date``, ``close``; ISO dates, UTF-8,
header required); extra columns are ignored. Result bundles serialize to
JSON or one-row CSV with ``schema_version`` 1. Prices render with 4
decimal places by default; ``raw=True`` switches to shortest
round-tripping floats so ``parse(serialize(bundle)) == bundle`` exactly.
Row numbers in error messages are 1-based file lines including the
header.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .calibration import HistoricalSeries
from .engine import RangeErrorReport, SimulationConfig, SimulationSummary
from .errors import CsvDataError, CsvParseError, CsvSchemaError, DataIoError
from .models import GbmParams, HestonParams, PricePath

SCHEMA_VERSION = 1

_PARAM_TYPES = {"gbm": GbmParams, "heston": HestonParams}


@dataclass(frozen=True)
class ResultBundle:
    """A self-reproducing simulation result: config echo, summary, report.

    ``paths_file`` optionally references an external path dump written
    alongside the bundle.
    """

    scheme: str
    params: GbmParams | HestonParams
    config: SimulationConfig
    summary: SimulationSummary
    report: RangeErrorReport | None = None
    paths_file: str | None = None

    @property
    def model(self) -> str:
        return "heston" if isinstance(self.params, HestonParams) else "gbm"


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    return source


def load_prices(source, dt: float = 1.0 / 252.0) -> HistoricalSeries:
    """Parse a price CSV into a :class:`HistoricalSeries`.

    ``source`` may be a path, bytes, or an open text stream. Column
    names are matched case-insensitively after stripping whitespace.
    """
    fh = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError("date")
        names = [h.strip().lower() for h in header]
        for required in ("date", "close"):
            if required not in names:
                raise CsvSchemaError(required)
        i_date = names.index("date")
        i_close = names.index("close")
        dates: list[date] = []
        closes: list[float] = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                raise CsvDataError(line, "blank row")
            if len(row) <= max(i_date, i_close):
                raise CsvDataError(line, f"expected {len(names)} cells, got {len(row)}")
            raw_date = row[i_date].strip()
            try:
                d = date.fromisoformat(raw_date)
            except ValueError:
                raise CsvParseError(line, "date", f"not an ISO date: {raw_date!r}")
            raw_close = row[i_close].strip()
            try:
                c = float(raw_close)
            except ValueError:
                raise CsvParseError(line, "close", f"not a number: {raw_close!r}")
            if not np.isfinite(c):
                raise CsvParseError(line, "close", f"not finite: {raw_close!r}")
            if c <= 0:
                raise CsvDataError(line, f"close must be positive, got {c}")
            if dates:
                if d == dates[-1]:
                    raise CsvDataError(line, f"duplicate date {d.isoformat()}")
                if d < dates[-1]:
                    raise CsvDataError(line, f"dates must increase, got {d.isoformat()}")
            dates.append(d)
            closes.append(c)
        if len(closes) < 2:
            raise CsvDataError(len(closes) + 1, "need at least 2 price rows")
        return HistoricalSeries(tuple(dates), np.array(closes), dt)
    finally:
        if isinstance(source, (str, Path, bytes)):
            fh.close()


def write_prices(series: HistoricalSeries) -> bytes:
    """Serialize a series to the price CSV schema with full float fidelity."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", "close"])
    for d, c in zip(series.dates, series.closes):
        writer.writerow([d.isoformat(), repr(float(c))])
    return out.getvalue().encode("utf-8")


def _render(x: float, raw: bool) -> float:
    return float(x) if raw else round(float(x), 4)


def _params_dict(params) -> dict:
    # full fidelity regardless of display rounding: the config echo is
    # what makes a result file re-runnable
    if isinstance(params, HestonParams):
        keys = ("mu", "kappa", "theta", "sigma_v", "rho", "v0", "x0")
    else:
        keys = ("mu", "sigma", "x0")
    return {k: float(getattr(params, k)) for k in keys}


def bundle_to_dict(bundle: ResultBundle, raw: bool = False) -> dict:
    s = bundle.summary
    out = {
        "schema_version": SCHEMA_VERSION,
        "model": bundle.model,
        "scheme": bundle.scheme,
        "params": _params_dict(bundle.params),
        "config": {
            "n_paths": bundle.config.n_paths,
            "n_steps": bundle.config.n_steps,
            "horizon": float(bundle.config.horizon),
            "seed": bundle.config.seed,
        },
        "summary": {
            "terminal_min": _render(s.terminal_min, raw),
            "terminal_max": _render(s.terminal_max, raw),
            "terminal_mean": _render(s.terminal_mean, raw),
            "terminal_std": _render(s.terminal_std, raw),
            "quantiles": {k: _render(v, raw) for k, v in s.quantiles.items()},
        },
        "warnings": list(bundle.params.warnings),
    }
    if s.truncation_events is not None:
        out["summary"]["truncation_events"] = s.truncation_events
    if bundle.report is not None:
        r = bundle.report
        out["report"] = {
            "simulated_low": _render(r.simulated_low, raw),
            "simulated_high": _render(r.simulated_high, raw),
            "exact_low": _render(r.exact_low, raw),
            "exact_high": _render(r.exact_high, raw),
            "abs_error_low": _render(r.abs_error_low, raw),
            "abs_error_high": _render(r.abs_error_high, raw),
        }
    if bundle.paths_file is not None:
        out["paths_file"] = bundle.paths_file
    return out


def bundle_from_dict(data: dict) -> ResultBundle:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise DataIoError(
            f"unsupported schema_version {data.get('schema_version')!r}; expected {SCHEMA_VERSION}"
        )
    try:
        params = _PARAM_TYPES[data["model"]](**data["params"])
        cfg = data["config"]
        config = SimulationConfig(
            n_paths=int(cfg["n_paths"]), n_steps=int(cfg["n_steps"]),
            horizon=float(cfg["horizon"]), seed=int(cfg["seed"]),
        )
        s = data["summary"]
        summary = SimulationSummary(
            terminal_min=float(s["terminal_min"]),
            terminal_max=float(s["terminal_max"]),
            terminal_mean=float(s["terminal_mean"]),
            terminal_std=float(s["terminal_std"]),
            quantiles={k: float(v) for k, v in s["quantiles"].items()},
            truncation_events=(int(s["truncation_events"])
                               if "truncation_events" in s else None),
        )
        report = None
        if "report" in data:
            r = data["report"]
            report = RangeErrorReport(
                simulated_low=float(r["simulated_low"]),
                simulated_high=float(r["simulated_high"]),
                exact_low=float(r["exact_low"]),
                exact_high=float(r["exact_high"]),
                abs_error_low=float(r["abs_error_low"]),
                abs_error_high=float(r["abs_error_high"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataIoError(f"malformed result bundle: {exc}")
    return ResultBundle(
        scheme=data["scheme"], params=params, config=config, summary=summary,
        report=report, paths_file=data.get("paths_file"),
    )


_CSV_REPORT_FIELDS = ("simulated_low", "simulated_high", "exact_low",
                      "exact_high", "abs_error_low", "abs_error_high")


def write_summary(bundle: ResultBundle, fmt: str = "json", raw: bool = False) -> bytes:
    """Serialize a bundle to JSON or one-row CSV with deterministic field order."""
    if fmt == "json":
        return (json.dumps(bundle_to_dict(bundle, raw), indent=2, sort_keys=False)
                + "\n").encode("utf-8")
    if fmt != "csv":
        raise DataIoError(f"unsupported summary format {fmt!r}")
    d = bundle_to_dict(bundle, raw)
    header: list[str] = ["schema_version", "model", "scheme"]
    values: list = [d["schema_version"], d["model"], d["scheme"]]
    for k, v in d["params"].items():
        header.append(f"param_{k}")
        values.append(repr(v) if raw else v)
    for k, v in d["config"].items():
        header.append(k)
        values.append(repr(v) if raw and isinstance(v, float) else v)
    s = d["summary"]
    for k in ("terminal_min", "terminal_max", "terminal_mean", "terminal_std"):
        header.append(k)
        values.append(repr(s[k]) if raw else s[k])
    for k, v in s["quantiles"].items():
        header.append(f"q{k.rstrip('%')}")
        values.append(repr(v) if raw else v)
    header.append("truncation_events")
    values.append(s.get("truncation_events", ""))
    for k in _CSV_REPORT_FIELDS:
        header.append(k)
        values.append((repr(d["report"][k]) if raw else d["report"][k])
                      if "report" in d else "")
    header.append("paths_file")
    values.append(d.get("paths_file", ""))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerow(values)
    return out.getvalue().encode("utf-8")


def read_summary(data: bytes, fmt: str = "json") -> ResultBundle:
    """Parse bytes produced by :func:`write_summary` back into a bundle."""
    if fmt == "json":
        try:
            return bundle_from_dict(json.loads(data.decode("utf-8")))
        except json.JSONDecodeError as exc:
            raise DataIoError(f"invalid JSON: {exc}")
    if fmt != "csv":
        raise DataIoError(f"unsupported summary format {fmt!r}")
    rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
    if len(rows) != 2:
        raise DataIoError(f"expected header plus one record, got {len(rows)} rows")
    rec = dict(zip(rows[0], rows[1]))
    try:
        model = rec["model"]
        params = {k[len("param_"):]: float(v) for k, v in rec.items()
                  if k.startswith("param_")}
        d: dict = {
            "schema_version": int(rec["schema_version"]),
            "model": model,
            "scheme": rec["scheme"],
            "params": params,
            "config": {
                "n_paths": int(rec["n_paths"]), "n_steps": int(rec["n_steps"]),
                "horizon": float(rec["horizon"]), "seed": int(rec["seed"]),
            },
            "summary": {
                k: float(rec[k]) for k in
                ("terminal_min", "terminal_max", "terminal_mean", "terminal_std")
            },
        }
        d["summary"]["quantiles"] = {
            f"{k[1:]}%": float(v) for k, v in rec.items() if k.startswith("q")
        }
        if rec.get("truncation_events", "") != "":
            d["summary"]["truncation_events"] = int(rec["truncation_events"])
        if rec.get("simulated_low", "") != "":
            d["report"] = {k: float(rec[k]) for k in _CSV_REPORT_FIELDS}
        if rec.get("paths_file", "") != "":
            d["paths_file"] = rec["paths_file"]
    except (KeyError, ValueError) as exc:
        raise DataIoError(f"malformed summary CSV: {exc}")
    return bundle_from_dict(d)


def write_paths(paths: Iterable[PricePath], terminal_only: bool = False) -> bytes:
    """Dump paths as long-format CSV for external plotting.

    Columns: ``path``, ``step``, ``time``, ``price`` and, when variance
    paths exist, ``variance``. ``terminal_only`` keeps one row per path
    (the closing value of each trajectory).
    """
    paths = list(paths)
    if not paths:
        raise DataIoError("cannot dump an empty path collection")
    with_variance = all(p.variances is not None for p in paths)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["path", "step", "time", "price"] + (["variance"] if with_variance else [])
    writer.writerow(header)
    for i, p in enumerate(paths):
        steps = [p.times.size - 1] if terminal_only else range(p.times.size)
        for k in steps:
            row = [i, k, repr(float(p.times[k])), repr(float(p.prices[k]))]
            if with_variance:
                row.append(repr(float(p.variances[k])))
            writer.writerow(row)
    return out.getvalue().encode("utf-8")

"""Seeded Monte Carlo forecasting of asset-price ranges.

Core pieces: reproducible per-path random streams (:mod:`stochpath.rng`),
GBM and Heston path dynamics (:mod:`stochpath.models`), a deterministic
parallel engine (:mod:`stochpath.engine`), close-price calibration
(:mod:`stochpath.calibration`) and CSV/JSON serialization
(:mod:`stochpath.data_io`). The HTTP service lives in
:mod:`stochpath.service`; the CLI in :mod:`stochpath.cli` is a thin
client over the same request handlers.
"""

from .calibration import (
    CalibrationDiagnostics,
    CalibrationReport,
    HistoricalSeries,
    calibrate,
    estimate_gbm,
    estimate_heston,
)
from .data_io import (
    ResultBundle,
    load_prices,
    read_summary,
    write_paths,
    write_prices,
    write_summary,
)
from .engine import (
    ComparisonResult,
    RangeErrorReport,
    SimulationConfig,
    SimulationResult,
    SimulationSummary,
    compare_models,
    range_error,
    run_simulation,
    summarize,
)
from .errors import (
    ConfigurationError,
    CsvDataError,
    CsvParseError,
    CsvSchemaError,
    DataIoError,
    DomainError,
    EstimationError,
    StochPathError,
)
from .models import (
    GbmParams,
    HestonParams,
    PricePath,
    gbm_em_path,
    gbm_em_step,
    gbm_exact_path,
    heston_em_step,
    heston_path,
)
from .rng import CorrelatedPair, RandomStream, correlated_pair, wiener_increment

__version__ = "0.1.0"

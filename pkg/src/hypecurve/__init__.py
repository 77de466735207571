"""Two-phase research-impact curves: model, fitting, analytics, synthesis."""

from .analysis import (
    CurveSamples,
    Dip,
    ForecastRow,
    HypeReport,
    InvalidEpsilon,
    ReportConfig,
    UnconvergedFit,
    build_report,
    detect_dip,
    forecast,
    pub_trigger_algebraic,
    sample_curves,
    trigger_time,
)
from .fit import (
    DegenerateFit,
    FitConfig,
    FitResult,
    fit_joint,
    fit_science,
    fit_tech,
    grid_oracle,
    init_science,
    joint_sse,
)
from .model import (
    PATENTS,
    PUBLICATIONS,
    HypeParams,
    ScienceParams,
    TechParams,
    bin_expected,
    cumulative,
    hype,
    patent_rate,
    pub_rate,
)
from .series import (
    DuplicateYear,
    EmptyInput,
    EmptySourceList,
    LabelMismatch,
    MalformedRow,
    NegativeCount,
    NormalizedPair,
    SeriesError,
    TooFewPoints,
    YearSeries,
    ZeroMax,
    average_sources,
    normalize_pair,
    parse_csv,
    serialize_csv,
    total,
)
from .synth import DegenerateRange, NoiseSpec, generate, oled_fixture

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "PUBLICATIONS",
    "PATENTS",
    "ScienceParams",
    "TechParams",
    "HypeParams",
    "cumulative",
    "pub_rate",
    "patent_rate",
    "hype",
    "bin_expected",
    # series
    "YearSeries",
    "NormalizedPair",
    "parse_csv",
    "serialize_csv",
    "average_sources",
    "normalize_pair",
    "total",
    "SeriesError",
    "EmptyInput",
    "MalformedRow",
    "NegativeCount",
    "DuplicateYear",
    "TooFewPoints",
    "EmptySourceList",
    "LabelMismatch",
    "ZeroMax",
    # fit
    "FitConfig",
    "FitResult",
    "DegenerateFit",
    "init_science",
    "fit_science",
    "fit_tech",
    "fit_joint",
    "joint_sse",
    "grid_oracle",
    # analysis
    "HypeReport",
    "ReportConfig",
    "Dip",
    "ForecastRow",
    "CurveSamples",
    "InvalidEpsilon",
    "UnconvergedFit",
    "trigger_time",
    "pub_trigger_algebraic",
    "detect_dip",
    "forecast",
    "build_report",
    "sample_curves",
    # synth
    "NoiseSpec",
    "DegenerateRange",
    "generate",
    "oled_fixture",
]

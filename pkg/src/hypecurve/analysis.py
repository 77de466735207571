"""Analytics derived from fitted parameters.

Trigger years (the onset of each phase), the delay between them, the
interior dip of the combined curve, per-year forecasts, and dense curve
samples for plotting.  A "trigger" is operationalized as the earliest year
at which a curve's rate reaches a configurable fraction (default 5%) of
its own reference level: the peak rate k*r/4 for publications, the plateau
p*k for patents.

Dip presence is always decided numerically from a dense scan of the
combined curve, never from a parameter inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fit import FitResult
from .model import (
    PATENTS,
    PUBLICATIONS,
    HypeParams,
    ScienceParams,
    bin_expected,
    patent_rate_array,
    pub_rate,
    pub_rate_array,
)

__all__ = [
    "InvalidEpsilon",
    "UnconvergedFit",
    "Dip",
    "ForecastRow",
    "HypeReport",
    "ReportConfig",
    "CurveSamples",
    "trigger_time",
    "pub_trigger_algebraic",
    "detect_dip",
    "forecast",
    "build_report",
    "sample_curves",
]

DEFAULT_EPSILON = 0.05
DEFAULT_HORIZON_YEARS = 10
TRIGGER_TOL_YEARS = 1e-6
DIP_REFINE_TOL_YEARS = 1e-4


class InvalidEpsilon(ValueError):
    pass


class UnconvergedFit(RuntimeError):
    pass


@dataclass(frozen=True)
class Dip:
    """Interior local minimum of the combined curve.

    ``depth`` is relative to the preceding local maximum, in (0, 1), so it
    is invariant under rescaling of the curve amplitudes.
    """

    year: float
    depth: float


@dataclass(frozen=True)
class ForecastRow:
    """One forecast year.

    pub_rate / pat_rate / hype are expected counts over the bin [year,
    year+1).  peak_ratio is the instantaneous publication rate at the year
    relative to the peak rate k*r/4.
    """

    year: int
    pub_rate: float
    pat_rate: float
    hype: float
    peak_ratio: float


@dataclass(frozen=True)
class HypeReport:
    """Analytics bundle for one fitted parameter set.

    Patent-side fields are None for publication-only fits.
    """

    pub_peak_year: float
    pub_peak_rate: float
    pub_trigger_year: float
    pat_trigger_year: Optional[float]
    delay_years: Optional[float]
    patent_plateau: Optional[float]
    dip: Optional[Dip]
    forecast: tuple[ForecastRow, ...]
    epsilon: float


@dataclass(frozen=True)
class ReportConfig:
    epsilon: float = DEFAULT_EPSILON
    horizon_years: int = DEFAULT_HORIZON_YEARS

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidEpsilon(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.horizon_years < 0:
            raise ValueError("horizon_years must be >= 0")


def _bisect_earliest(f, lo: float, hi: float, tol: float) -> float:
    """Earliest root of the increasing sign change f(lo) < 0 <= f(hi)."""
    flo = f(lo)
    if flo >= 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def trigger_time(params, curve: str = PUBLICATIONS, epsilon: float = DEFAULT_EPSILON) -> float:
    """Earliest year at which the curve reaches epsilon of its reference.

    Publications: rate crossing epsilon * k*r/4 on the rising flank.
    Patents: rate crossing epsilon * p*k (the curve is monotone).
    Found by bisection on the closed form to 1e-6 years.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidEpsilon(f"epsilon must be in (0, 1), got {epsilon}")
    if curve == PUBLICATIONS:
        sp = params.science if isinstance(params, HypeParams) else params
        target = epsilon * sp.k * sp.r / 4.0
        # Rising flank: pub_rate is strictly increasing on (-inf, t0].
        lo = sp.t0 - (math.log(4.0 / epsilon) + 40.0) / sp.r
        return _bisect_earliest(lambda t: pub_rate(t, sp) - target, lo, sp.t0, TRIGGER_TOL_YEARS)
    if curve == PATENTS:
        if not isinstance(params, HypeParams):
            raise TypeError("patent trigger requires HypeParams")
        hp = params
        sp = hp.science
        target = epsilon * hp.p * sp.k
        center = sp.t0 + hp.tstar + math.log(epsilon / (1.0 - epsilon)) / sp.r
        lo, hi = center - 40.0 / sp.r, center + 40.0 / sp.r
        from .model import patent_rate

        return _bisect_earliest(lambda t: patent_rate(t, hp) - target, lo, hi, TRIGGER_TOL_YEARS)
    raise ValueError(f"unknown curve {curve!r}")


def pub_trigger_algebraic(sp: ScienceParams, epsilon: float = DEFAULT_EPSILON) -> float:
    """Closed-form publication trigger.

    With u = e^{-r (t - t0)}, the crossing 4u/(1+u)^2 = epsilon on the
    rising flank has the root u = (2 - eps + 2 sqrt(1 - eps)) / eps, so
    t = t0 - ln(u)/r.  Must agree with the bisection in `trigger_time`.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidEpsilon(f"epsilon must be in (0, 1), got {epsilon}")
    u = (2.0 - epsilon + 2.0 * math.sqrt(1.0 - epsilon)) / epsilon
    return sp.t0 - math.log(u) / sp.r


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimum of a unimodal f on [lo, hi] to width tol."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _hype_array(t: np.ndarray, hp: HypeParams) -> np.ndarray:
    return pub_rate_array(t, hp.science) + patent_rate_array(t, hp)


def detect_dip(hp: HypeParams, grid_step_factor: float = 0.01) -> Optional[Dip]:
    """Locate the combined curve's interior dip, if any.

    Scans the combined curve on a grid of step ``grid_step_factor / r``
    over [t0 - 20/r, t0 + max(tstar, 0) + 20/r] for a local maximum
    followed by a local minimum followed by a rise toward the plateau,
    then refines the minimum by golden-section to 1e-4 years.  Returns
    None when the curve has no interior minimum.
    """
    sp = hp.science
    step = grid_step_factor / sp.r
    lo = sp.t0 - 20.0 / sp.r
    hi = sp.t0 + max(hp.tstar, 0.0) + 20.0 / sp.r
    n = int(round((hi - lo) / step)) + 1
    t = np.linspace(lo, hi, n)
    h = _hype_array(t, hp)

    diffs = np.diff(h)
    tol = 1e-12 * float(h.max())
    signs = np.where(diffs > tol, 1, np.where(diffs < -tol, -1, 0))
    nonzero = np.nonzero(signs)[0]

    # State machine over non-flat segments: rise, fall (local max), rise
    # again (local min).
    state = 0
    i_max = i_min = None
    for j in nonzero:
        s = signs[j]
        if state == 0 and s > 0:
            state = 1
        elif state == 1 and s < 0:
            state = 2
            i_max = j
        elif state == 2 and s > 0:
            i_min = j
            break
    if i_min is None:
        return None

    bracket_lo = t[max(i_min - 1, 0)]
    bracket_hi = t[min(i_min + 1, n - 1)]
    year = _golden_min(lambda x: float(_hype_array(np.array([x]), hp)[0]), bracket_lo, bracket_hi,
                       DIP_REFINE_TOL_YEARS)
    h_min = float(_hype_array(np.array([year]), hp)[0])
    h_max = float(h[: i_min + 1].max())
    depth = (h_max - h_min) / h_max
    if depth <= 0.0:
        return None
    return Dip(year=year, depth=depth)


def forecast(hp: HypeParams, from_year: int, horizon_years: int) -> list[ForecastRow]:
    """Per-year expected counts from `from_year` through `from_year +
    horizon_years` inclusive, plus each year's publication rate relative
    to the peak rate."""
    if horizon_years < 0:
        raise ValueError("horizon_years must be >= 0")
    sp = hp.science
    peak = sp.k * sp.r / 4.0
    rows = []
    for year in range(from_year, from_year + horizon_years + 1):
        n = bin_expected(year, sp, PUBLICATIONS)
        p = bin_expected(year, hp, PATENTS)
        rows.append(
            ForecastRow(
                year=year,
                pub_rate=n,
                pat_rate=p,
                hype=n + p,
                peak_ratio=pub_rate(float(year), sp) / peak,
            )
        )
    return rows


def _forecast_science_only(sp: ScienceParams, from_year: int, horizon_years: int) -> list[ForecastRow]:
    peak = sp.k * sp.r / 4.0
    rows = []
    for year in range(from_year, from_year + horizon_years + 1):
        n = bin_expected(year, sp, PUBLICATIONS)
        rows.append(ForecastRow(year, n, 0.0, n, pub_rate(float(year), sp) / peak))
    return rows


def build_report(fit: FitResult, cfg: ReportConfig = ReportConfig()) -> HypeReport:
    """Assemble the analytics bundle from a converged fit.

    Forecasting starts the year after the last observed year and spans
    ``cfg.horizon_years`` (default 10).
    """
    if not fit.converged:
        raise UnconvergedFit("fit did not converge; no report built")
    last_observed = max(year for _, year, _ in fit.residuals)
    start = last_observed + 1

    if isinstance(fit.params, ScienceParams):
        sp = fit.params
        return HypeReport(
            pub_peak_year=sp.t0,
            pub_peak_rate=sp.k * sp.r / 4.0,
            pub_trigger_year=trigger_time(sp, PUBLICATIONS, cfg.epsilon),
            pat_trigger_year=None,
            delay_years=None,
            patent_plateau=None,
            dip=None,
            forecast=tuple(_forecast_science_only(sp, start, cfg.horizon_years)),
            epsilon=cfg.epsilon,
        )

    hp = fit.params
    sp = hp.science
    pub_trigger = trigger_time(hp, PUBLICATIONS, cfg.epsilon)
    pat_trigger = trigger_time(hp, PATENTS, cfg.epsilon)
    return HypeReport(
        pub_peak_year=sp.t0,
        pub_peak_rate=sp.k * sp.r / 4.0,
        pub_trigger_year=pub_trigger,
        pat_trigger_year=pat_trigger,
        delay_years=pat_trigger - pub_trigger,
        patent_plateau=hp.p * sp.k,
        dip=detect_dip(hp),
        forecast=tuple(forecast(hp, start, cfg.horizon_years)),
        epsilon=cfg.epsilon,
    )


@dataclass(frozen=True)
class CurveSamples:
    """Dense curve samples for plotting or export.

    Columns: time, publication rate N, patent rate P, combined H.
    """

    t: np.ndarray
    n: np.ndarray
    p: np.ndarray
    h: np.ndarray

    def to_csv_text(self) -> str:
        lines = ["t,N,P,H"]
        for t, n, p, h in zip(self.t, self.n, self.p, self.h):
            lines.append(f"{t:.12g},{n:.12g},{p:.12g},{h:.12g}")
        return "\n".join(lines) + "\n"


def sample_curves(params, t_start: float, t_end: float, step: float = 0.1) -> CurveSamples:
    """Sample the model curves on [t_start, t_end] with the given step.

    Accepts HypeParams or ScienceParams; with science-only parameters the
    patent column is zero.
    """
    if not t_end > t_start:
        raise ValueError("t_end must be greater than t_start")
    if not step > 0:
        raise ValueError("step must be > 0")
    count = int(math.floor((t_end - t_start) / step + 1e-9)) + 1
    t = t_start + step * np.arange(count)
    if isinstance(params, HypeParams):
        n = pub_rate_array(t, params.science)
        p = patent_rate_array(t, params)
    else:
        n = pub_rate_array(t, params)
        p = np.zeros_like(n)
    return CurveSamples(t=t, n=n, p=p, h=n + p)

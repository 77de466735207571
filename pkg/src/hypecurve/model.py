"""Closed-form curves of the two-phase research-impact model.

A field's cumulative publication count follows a logistic (Verhulst) curve
with carrying capacity ``k``, growth rate ``r`` and inflection year ``t0``.
The yearly publication rate is its derivative, a symmetric bell.  Patent
deposits track the accumulated knowledge: the patent rate is proportional
(factor ``p``) to the cumulative curve, delayed by ``tstar`` years.  The
combined impact curve is the sum of the two rates.

Time is a continuous calendar year; a yearly observation covers the bin
``[y, y+1)``.  All evaluations branch on the sign of the exponent so they
stay finite for arbitrarily large ``|r*(t-t0)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
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
    "pub_bins",
    "patent_bins",
]

PUBLICATIONS = "publications"
PATENTS = "patents"


@dataclass(frozen=True)
class ScienceParams:
    """Parameters of the publication-growth phase.

    k: carrying capacity (total eventual publications), > 0.
    r: growth rate in 1/year, > 0.
    t0: inflection year (peak of the publication rate), finite.
    """

    k: float
    r: float
    t0: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"carrying capacity k must be positive and finite, got {self.k}")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"growth rate r must be positive and finite, got {self.r}")
        if not math.isfinite(self.t0):
            raise ValueError(f"inflection year t0 must be finite, got {self.t0}")


@dataclass(frozen=True)
class TechParams:
    """Parameters of the technology phase.

    p: patents per accumulated publication (dimensionless), > 0.
    tstar: delay in years between the scientific and technological phases.
        Negative values are representable; their interpretation is left to
        the analysis layer.
    """

    p: float
    tstar: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise ValueError(f"patent ratio p must be positive and finite, got {self.p}")
        if not math.isfinite(self.tstar):
            raise ValueError(f"delay tstar must be finite, got {self.tstar}")


@dataclass(frozen=True)
class HypeParams:
    """Full parameter set: science phase plus technology phase."""

    science: ScienceParams
    tech: TechParams

    @property
    def k(self) -> float:
        return self.science.k

    @property
    def r(self) -> float:
        return self.science.r

    @property
    def t0(self) -> float:
        return self.science.t0

    @property
    def p(self) -> float:
        return self.tech.p

    @property
    def tstar(self) -> float:
        return self.tech.tstar

    @staticmethod
    def from_values(k: float, r: float, t0: float, p: float, tstar: float) -> "HypeParams":
        return HypeParams(ScienceParams(k, r, t0), TechParams(p, tstar))


def _sigmoid(x: float) -> float:
    # Overflow-safe: never exponentiates a positive argument.
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _softplus(x: float) -> float:
    # log(1 + e^x), stable for both signs.
    if x >= 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def sigmoid_array(x: np.ndarray) -> np.ndarray:
    """Elementwise stable logistic function 1/(1+e^-x)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus_array(x: np.ndarray) -> np.ndarray:
    """Elementwise stable log(1+e^x)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = x[pos] + np.log1p(np.exp(-x[pos]))
    out[~pos] = np.log1p(np.exp(x[~pos]))
    return out


def cumulative(t: float, sp: ScienceParams) -> float:
    """Cumulative publications at year t: k / (1 + e^{-r (t - t0)})."""
    return sp.k * _sigmoid(sp.r * (t - sp.t0))


def pub_rate(t: float, sp: ScienceParams) -> float:
    """Publication rate at year t, the derivative of `cumulative`.

    Peaks at t = t0 with value k*r/4 and is symmetric about t0.
    """
    s = _sigmoid(sp.r * (t - sp.t0))
    return sp.k * sp.r * s * (1.0 - s)


def patent_rate(t: float, hp: HypeParams) -> float:
    """Patent deposit rate at year t: p times the cumulative curve delayed
    by tstar years.  Saturates at p*k."""
    sp = hp.science
    return hp.p * sp.k * _sigmoid(sp.r * (t - hp.tstar - sp.t0))


def hype(t: float, hp: HypeParams) -> float:
    """Combined impact: publication rate plus patent rate."""
    return pub_rate(t, hp.science) + patent_rate(t, hp)


def pub_rate_array(t: np.ndarray, sp: ScienceParams) -> np.ndarray:
    """Vectorized `pub_rate`."""
    s = sigmoid_array(sp.r * (np.asarray(t, dtype=float) - sp.t0))
    return sp.k * sp.r * s * (1.0 - s)


def patent_rate_array(t: np.ndarray, hp: HypeParams) -> np.ndarray:
    """Vectorized `patent_rate`."""
    sp = hp.science
    return hp.p * sp.k * sigmoid_array(sp.r * (np.asarray(t, dtype=float) - hp.tstar - sp.t0))


def _adaptive_simpson(f, a: float, b: float, rel_tol: float, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of f over [a, b] to relative tolerance."""

    def simpson(lo, flo, hi, fhi, fmid):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, flo, hi, fhi, fmid, whole, depth):
        mid = 0.5 * (lo + hi)
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm = f(lmid)
        frm = f(rmid)
        left = simpson(lo, flo, mid, fmid, flm)
        right = simpson(mid, fmid, hi, fhi, frm)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * rel_tol * abs(left + right):
            return left + right + delta / 15.0
        return recurse(lo, flo, mid, fmid, flm, left, depth + 1) + recurse(
            mid, fmid, hi, fhi, frm, right, depth + 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(a, fa, b, fb, fm)
    return recurse(a, fa, b, fb, fm, whole, 0)


PATENT_BIN_REL_TOL = 1e-8


def bin_expected(year_start: float, params, curve: str = PUBLICATIONS) -> float:
    """Expected count in the one-year bin [year_start, year_start+1).

    For publications this is the exact increment of the cumulative curve.
    For patents it integrates the patent rate by adaptive Simpson
    quadrature to relative tolerance 1e-8.
    """
    if curve == PUBLICATIONS:
        sp = params.science if isinstance(params, HypeParams) else params
        return cumulative(year_start + 1.0, sp) - cumulative(year_start, sp)
    if curve == PATENTS:
        if not isinstance(params, HypeParams):
            raise TypeError("patents bin requires HypeParams")
        hp = params
        return _adaptive_simpson(
            lambda t: patent_rate(t, hp), year_start, year_start + 1.0, PATENT_BIN_REL_TOL
        )
    raise ValueError(f"unknown curve {curve!r}")


def pub_bins(years: np.ndarray, sp: ScienceParams) -> np.ndarray:
    """Expected publication counts for the bins [y, y+1), vectorized.

    Exact closed form: C(y+1) - C(y).
    """
    years = np.asarray(years, dtype=float)
    hi = sigmoid_array(sp.r * (years + 1.0 - sp.t0))
    lo = sigmoid_array(sp.r * (years - sp.t0))
    return sp.k * (hi - lo)


def patent_bins(years: np.ndarray, hp: HypeParams) -> np.ndarray:
    """Expected patent counts for the bins [y, y+1), vectorized.

    Uses the exact antiderivative of the delayed cumulative curve,
    (k/r) * log(1 + e^{r (t - tstar - t0)}), so it agrees with the
    quadrature in `bin_expected` to well below its tolerance while being
    cheap enough for optimizer inner loops.
    """
    sp = hp.science
    years = np.asarray(years, dtype=float)
    shift = years - hp.tstar - sp.t0
    hi = softplus_array(sp.r * (shift + 1.0))
    lo = softplus_array(sp.r * shift)
    return hp.p * sp.k / sp.r * (hi - lo)

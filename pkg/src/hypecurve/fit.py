"""Nonlinear least-squares estimation of the impact-curve parameters.

The observed yearly counts are matched against bin-integrated model curves
(point evaluation at bin midpoints is available as a cheaper alternative).
Minimization is derivative-free: a Nelder-Mead simplex restarted from
several jittered initializations.  Positivity of k, r and p is guaranteed
by optimizing their logarithms; t0 and tstar are unconstrained.

In joint mode the five parameters are estimated simultaneously from both
series, each series' residuals divided by that series' maximum count so
neither indicator dominates.  Independent mode estimates the science
parameters from publications alone, then the technology parameters with
the science parameters frozen.

The estimation criterion is plain least squares; this choice is recorded
in run manifests emitted by the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import (
    HypeParams,
    ScienceParams,
    TechParams,
    patent_bins,
    patent_rate_array,
    pub_bins,
    pub_rate_array,
    sigmoid_array,
    softplus_array,
)
from .series import YearSeries, total

__all__ = [
    "FitConfig",
    "FitResult",
    "DegenerateFit",
    "init_science",
    "fit_science",
    "fit_tech",
    "fit_joint",
    "joint_sse",
    "grid_oracle",
]

MODE_JOINT = "joint"
MODE_INDEPENDENT = "independent"
FORWARD_BIN = "bin_integral"
FORWARD_MIDPOINT = "midpoint"

# Relative simplex-extent threshold: treat a fully collapsed simplex as
# converged even when the objective is exactly zero (noise-free data).
_X_COLLAPSE_RTOL = 1e-12

_LOG_JITTER = math.log(2.0)  # multiplicative factor in [1/2, 2] for k, r, p
_YEAR_JITTER = 2.0           # +/- years for t0 and tstar


class DegenerateFit(RuntimeError):
    """Every optimizer start terminated with a non-finite objective."""


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    mode: "joint" (shared science parameters fitted against both series)
        or "independent" (science first, technology second).
    forward: "bin_integral" (default, integral of the rate over each yearly
        bin) or "midpoint" (rate at the bin midpoint).
    starts: number of initializations; the first is the plain heuristic,
        the rest are jittered (log-space for k, r, p; +/-2 years for t0 and
        tstar).
    max_iters: Nelder-Mead iteration cap per start.
    tol: relative objective-spread convergence tolerance.
    seed: PRNG seed for the start-point jitter (NumPy PCG64).
    """

    mode: str = MODE_JOINT
    forward: str = FORWARD_BIN
    starts: int = 16
    max_iters: int = 2000
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_JOINT, MODE_INDEPENDENT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.forward not in (FORWARD_BIN, FORWARD_MIDPOINT):
            raise ValueError(f"unknown forward model {self.forward!r}")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class FitResult:
    """Best parameters with goodness-of-fit and convergence diagnostics.

    ``sse`` is the minimized objective: raw squared residuals for
    single-series fits, max-scaled squared residuals in joint mode.
    ``residuals`` holds raw (observed - predicted) values as
    (series label, year, residual) triples.
    """

    params: HypeParams | ScienceParams
    sse: float
    rmse: float
    r_squared: float
    n_points: int
    converged: bool
    best_start_index: int
    residuals: tuple[tuple[str, int, float], ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.sse < 0:
            raise ValueError("sse must be non-negative")


def _science_forward(years: np.ndarray, sp: ScienceParams, forward: str) -> np.ndarray:
    if forward == FORWARD_BIN:
        return pub_bins(years, sp)
    return pub_rate_array(years + 0.5, sp)


def _tech_forward(years: np.ndarray, hp: HypeParams, forward: str) -> np.ndarray:
    if forward == FORWARD_BIN:
        return patent_bins(years, hp)
    return patent_rate_array(years + 0.5, hp)


def init_science(series: YearSeries) -> ScienceParams:
    """Heuristic starting point for the science parameters.

    t0 sits half a year past the peak-count year; k is the observed total,
    doubled when the maximum falls in the final two years (the curve is
    still rising, so the total undershoots the capacity); r comes from the
    peak-bin height, peak rate = k*r/4, clamped to [0.05, 3].
    """
    counts = series.counts_array()
    peak_idx = int(np.argmax(counts))
    t0 = series.years[peak_idx] + 0.5
    k = total(series)
    if series.years[peak_idx] >= series.last_year - 1:
        k *= 2.0
    k = max(k, 1.0)  # all-zero series: keep the optimizer well-posed
    r = min(max(4.0 * counts[peak_idx] / k, 0.05), 3.0)
    return ScienceParams(k=k, r=r, t0=t0)


def _init_tech(series: YearSeries, science: ScienceParams) -> TechParams:
    """Heuristic (p, tstar): plateau height over k, and the half-plateau
    crossing year of the patent series relative to t0."""
    counts = series.counts_array()
    peak = float(counts.max())
    p = max(peak / science.k, 1e-12)
    half_idx = int(np.argmax(counts >= 0.5 * peak)) if peak > 0 else 0
    tstar = series.years[half_idx] + 0.5 - science.t0
    return TechParams(p=p, tstar=tstar)


def _sanitize(value: float) -> float:
    return value if math.isfinite(value) else math.inf


def _nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    steps: np.ndarray,
    max_iters: int,
    rel_tol: float,
) -> tuple[np.ndarray, float, bool]:
    """Minimize f from x0; returns (x_best, f_best, converged).

    Standard simplex moves (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5).  A start converges when the simplex's relative objective
    spread drops below rel_tol, or the simplex collapses in parameter
    space; otherwise it stops at max_iters with converged=False.
    """
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += steps[i]
    values = np.array([_sanitize(f(x)) for x in simplex])

    converged = False
    for _ in range(max_iters):
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]

        f_best, f_worst = values[0], values[-1]
        spread = f_worst - f_best
        if math.isfinite(f_best) and spread <= rel_tol * max(abs(f_best), 1e-300):
            converged = True
            break
        extent = np.abs(simplex - simplex[0]).max(axis=0)
        scale = np.maximum(np.abs(simplex[0]), 1.0)
        if np.all(extent <= _X_COLLAPSE_RTOL * scale):
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        reflected = centroid + (centroid - simplex[-1])
        f_ref = _sanitize(f(reflected))

        if f_ref < values[0]:
            expanded = centroid + 2.0 * (centroid - simplex[-1])
            f_exp = _sanitize(f(expanded))
            if f_exp < f_ref:
                simplex[-1], values[-1] = expanded, f_exp
            else:
                simplex[-1], values[-1] = reflected, f_ref
        elif f_ref < values[-2]:
            simplex[-1], values[-1] = reflected, f_ref
        else:
            if f_ref < values[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (simplex[-1] - centroid)
            f_con = _sanitize(f(contracted))
            if f_con < min(f_ref, values[-1]):
                simplex[-1], values[-1] = contracted, f_con
            else:
                # Shrink toward the best vertex.
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [_sanitize(f(x)) for x in simplex[1:]]

    best = int(np.argmin(values))
    return simplex[best].copy(), float(values[best]), converged


def _multi_start(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    steps: np.ndarray,
    jitter: np.ndarray,
    cfg: FitConfig,
) -> tuple[np.ndarray, float, bool, int]:
    """Run Nelder-Mead from `starts` initializations; return the best.

    Start 0 uses x0 unmodified; later starts add uniform jitter per
    dimension.  Ties on the objective keep the lowest start index.
    """
    rng = np.random.default_rng(cfg.seed)
    best_x: np.ndarray | None = None
    best_f = math.inf
    best_converged = False
    best_idx = -1
    for s in range(cfg.starts):
        if s == 0:
            xs = x0.copy()
        else:
            xs = x0 + rng.uniform(-jitter, jitter)
        x, fval, conv = _nelder_mead(f, xs, steps, cfg.max_iters, cfg.tol)
        if math.isfinite(fval) and fval < best_f:
            best_x, best_f, best_converged, best_idx = x, fval, conv, s
    if best_x is None:
        raise DegenerateFit("non-finite objective at every start")
    return best_x, best_f, best_converged, best_idx


def _r_squared(sse: float, observed_blocks: Sequence[tuple[np.ndarray, float]]) -> float:
    """1 - sse / total-sum-of-squares, with the same per-block scaling that
    the objective applied (scale 1.0 for single-series fits)."""
    sst = 0.0
    for obs, scale in observed_blocks:
        sst += float(np.sum(((obs - obs.mean()) / scale) ** 2))
    if sst <= 0.0:
        return 0.0 if sse > 0 else 1.0
    return 1.0 - sse / sst


def _residual_triples(label: str, years, obs: np.ndarray, pred: np.ndarray):
    return tuple((label, int(y), float(o - m)) for y, o, m in zip(years, obs, pred))


def fit_science(series: YearSeries, cfg: FitConfig = FitConfig()) -> FitResult:
    """Estimate (k, r, t0) from one publication series."""
    years = series.years_array()
    obs = series.counts_array()
    init = init_science(series)
    x0 = np.array([math.log(init.k), math.log(init.r), init.t0])

    def objective(x: np.ndarray) -> float:
        sp = ScienceParams(math.exp(x[0]), math.exp(x[1]), x[2])
        resid = obs - _science_forward(years, sp, cfg.forward)
        return float(resid @ resid)

    steps = np.array([0.3, 0.3, 1.0])
    jitter = np.array([_LOG_JITTER, _LOG_JITTER, _YEAR_JITTER])
    x, sse, converged, start_idx = _multi_start(objective, x0, steps, jitter, cfg)

    sp = ScienceParams(math.exp(x[0]), math.exp(x[1]), x[2])
    pred = _science_forward(years, sp, cfg.forward)
    return FitResult(
        params=sp,
        sse=sse,
        rmse=math.sqrt(sse / len(obs)),
        r_squared=_r_squared(sse, [(obs, 1.0)]),
        n_points=len(obs),
        converged=converged,
        best_start_index=start_idx,
        residuals=_residual_triples(series.label, series.years, obs, pred),
    )


def fit_tech(series: YearSeries, science: ScienceParams, cfg: FitConfig = FitConfig()) -> FitResult:
    """Estimate (p, tstar) from a patent series with fixed science parameters."""
    years = series.years_array()
    obs = series.counts_array()
    init = _init_tech(series, science)
    x0 = np.array([math.log(init.p), init.tstar])

    def objective(x: np.ndarray) -> float:
        hp = HypeParams(science, TechParams(math.exp(x[0]), x[1]))
        resid = obs - _tech_forward(years, hp, cfg.forward)
        return float(resid @ resid)

    steps = np.array([0.3, 1.0])
    jitter = np.array([_LOG_JITTER, _YEAR_JITTER])
    x, sse, converged, start_idx = _multi_start(objective, x0, steps, jitter, cfg)

    hp = HypeParams(science, TechParams(math.exp(x[0]), x[1]))
    pred = _tech_forward(years, hp, cfg.forward)
    warnings = ()
    if hp.tstar < 0:
        warnings = (f"fitted delay tstar = {hp.tstar:.3f} is negative; "
                    "the technology phase would precede the science phase",)
    return FitResult(
        params=hp,
        sse=sse,
        rmse=math.sqrt(sse / len(obs)),
        r_squared=_r_squared(sse, [(obs, 1.0)]),
        n_points=len(obs),
        converged=converged,
        best_start_index=start_idx,
        residuals=_residual_triples(series.label, series.years, obs, pred),
        warnings=warnings,
    )


def joint_sse(pub: YearSeries, pat: YearSeries, hp: HypeParams, forward: str = FORWARD_BIN) -> float:
    """The joint objective: squared residuals of both series, each series
    divided by its own maximum count."""
    pub_scale = max(pub.max_count, 1e-300)
    pat_scale = max(pat.max_count, 1e-300)
    rp = (pub.counts_array() - _science_forward(pub.years_array(), hp.science, forward)) / pub_scale
    rq = (pat.counts_array() - _tech_forward(pat.years_array(), hp, forward)) / pat_scale
    return float(rp @ rp + rq @ rq)


def fit_joint(pub: YearSeries, pat: YearSeries, cfg: FitConfig = FitConfig()) -> FitResult:
    """Estimate all five parameters from a publication/patent series pair.

    Joint mode shares (k, r, t0) between the two curves and minimizes the
    max-scaled combined objective.  Independent mode chains fit_science and
    fit_tech and concatenates their diagnostics.
    """
    if cfg.mode == MODE_INDEPENDENT:
        return _fit_independent(pub, pat, cfg)

    pub_years, pub_obs = pub.years_array(), pub.counts_array()
    pat_years, pat_obs = pat.years_array(), pat.counts_array()
    pub_scale = max(pub.max_count, 1e-300)
    pat_scale = max(pat.max_count, 1e-300)

    science0 = init_science(pub)
    tech0 = _init_tech(pat, science0)
    x0 = np.array([
        math.log(science0.k),
        math.log(science0.r),
        science0.t0,
        math.log(tech0.p),
        tech0.tstar,
    ])

    def objective(x: np.ndarray) -> float:
        hp = HypeParams(
            ScienceParams(math.exp(x[0]), math.exp(x[1]), x[2]),
            TechParams(math.exp(x[3]), x[4]),
        )
        rp = (pub_obs - _science_forward(pub_years, hp.science, cfg.forward)) / pub_scale
        rq = (pat_obs - _tech_forward(pat_years, hp, cfg.forward)) / pat_scale
        return float(rp @ rp + rq @ rq)

    steps = np.array([0.3, 0.3, 1.0, 0.3, 1.0])
    jitter = np.array([_LOG_JITTER, _LOG_JITTER, _YEAR_JITTER, _LOG_JITTER, _YEAR_JITTER])
    x, sse, converged, start_idx = _multi_start(objective, x0, steps, jitter, cfg)

    hp = HypeParams(
        ScienceParams(math.exp(x[0]), math.exp(x[1]), x[2]),
        TechParams(math.exp(x[3]), x[4]),
    )
    pub_pred = _science_forward(pub_years, hp.science, cfg.forward)
    pat_pred = _tech_forward(pat_years, hp, cfg.forward)
    n_points = len(pub_obs) + len(pat_obs)
    warnings = ()
    if hp.tstar < 0:
        warnings = (f"fitted delay tstar = {hp.tstar:.3f} is negative; "
                    "the technology phase would precede the science phase",)
    return FitResult(
        params=hp,
        sse=sse,
        rmse=math.sqrt(sse / n_points),
        r_squared=_r_squared(sse, [(pub_obs, pub_scale), (pat_obs, pat_scale)]),
        n_points=n_points,
        converged=converged,
        best_start_index=start_idx,
        residuals=_residual_triples(pub.label, pub.years, pub_obs, pub_pred)
        + _residual_triples(pat.label, pat.years, pat_obs, pat_pred),
        warnings=warnings,
    )


def _fit_independent(pub: YearSeries, pat: YearSeries, cfg: FitConfig) -> FitResult:
    fs = fit_science(pub, cfg)
    ft = fit_tech(pat, fs.params, cfg)
    sse = fs.sse + ft.sse
    n_points = fs.n_points + ft.n_points
    return FitResult(
        params=ft.params,
        sse=sse,
        rmse=math.sqrt(sse / n_points),
        r_squared=_r_squared(sse, [(pub.counts_array(), 1.0), (pat.counts_array(), 1.0)]),
        n_points=n_points,
        converged=fs.converged and ft.converged,
        best_start_index=fs.best_start_index,
        residuals=fs.residuals + ft.residuals,
        warnings=fs.warnings + ft.warnings,
    )


def _grid_axis(lo: float, hi: float, steps: int, geometric: bool) -> np.ndarray:
    if geometric:
        return np.exp(np.linspace(math.log(lo), math.log(hi), steps))
    return np.linspace(lo, hi, steps)


def grid_oracle(
    pub: YearSeries,
    pat: YearSeries,
    bounds: Mapping[str, tuple[float, float]],
    steps: int,
) -> HypeParams:
    """Brute-force argmin of the joint objective over a parameter grid.

    ``bounds`` maps each of "k", "r", "t0", "p", "tstar" to (low, high).
    The k, r and p axes are geometrically spaced, t0 and tstar linearly.
    Exhaustively evaluates the same max-scaled bin-integral objective as
    `fit_joint` at every one of the steps**5 grid points and returns the
    parameters of the smallest value.  Intended for certifying optimizer
    results in tests.
    """
    if steps < 8:
        raise ValueError("steps must be >= 8 per axis")
    required = {"k", "r", "t0", "p", "tstar"}
    missing = required - set(bounds)
    if missing:
        raise ValueError(f"bounds missing axes: {sorted(missing)}")
    for name, (lo, hi) in bounds.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"bounds for {name!r} must be finite with low < high")

    k_ax = _grid_axis(*bounds["k"], steps, geometric=True)
    r_ax = _grid_axis(*bounds["r"], steps, geometric=True)
    t0_ax = _grid_axis(*bounds["t0"], steps, geometric=False)
    p_ax = _grid_axis(*bounds["p"], steps, geometric=True)
    ts_ax = _grid_axis(*bounds["tstar"], steps, geometric=False)

    pub_years, pub_obs = pub.years_array(), pub.counts_array()
    pat_years, pat_obs = pat.years_array(), pat.counts_array()
    wp2 = max(pub.max_count, 1e-300) ** 2
    wq2 = max(pat.max_count, 1e-300) ** 2
    pub_o2 = float(pub_obs @ pub_obs)
    pat_o2 = float(pat_obs @ pat_obs)

    # The squared error is quadratic in the amplitude that multiplies each
    # shape vector (k for publications, k*p for patents), so precompute the
    # shape cross-terms once per (r, t0) and (r, t0 + tstar) and sweep the
    # amplitude axes algebraically.
    s0 = t0_ax[:, None] + ts_ax[None, :]  # (t0, tstar) -> shift of the patent curve

    best_val = math.inf
    best_idx: tuple[int, int, int, int, int] | None = None
    A = k_ax[:, None] * p_ax[None, :]  # patent amplitudes, (k, p)

    for ir, r in enumerate(r_ax):
        # publications: shape G(y; r, t0), residual quadratic in k
        shape = sigmoid_array(r * (pub_years[None, :] + 1.0 - t0_ax[:, None])) - sigmoid_array(
            r * (pub_years[None, :] - t0_ax[:, None])
        )  # (t0, years)
        g1 = shape @ pub_obs          # (t0,)
        g2 = np.sum(shape * shape, 1)  # (t0,)
        pub_sse = (pub_o2 - 2.0 * k_ax[:, None] * g1[None, :] + (k_ax**2)[:, None] * g2[None, :]) / wp2
        # (k, t0)

        # patents: shape B(y; r, s0) with amplitude k*p
        flat_s0 = s0.reshape(-1)
        hi = softplus_array(r * (pat_years[None, :] + 1.0 - flat_s0[:, None]))
        lo = softplus_array(r * (pat_years[None, :] - flat_s0[:, None]))
        B = (hi - lo) / r  # (s0, years)
        b1 = (B @ pat_obs).reshape(s0.shape)       # (t0, tstar)
        b2 = np.sum(B * B, 1).reshape(s0.shape)    # (t0, tstar)

        pat_sse = (
            pat_o2
            - 2.0 * A[:, None, :, None] * b1[None, :, None, :]
            + (A**2)[:, None, :, None] * b2[None, :, None, :]
        ) / wq2  # (k, t0, p, tstar)

        total_sse = pat_sse + pub_sse[:, :, None, None]
        flat = int(np.argmin(total_sse))
        val = float(total_sse.reshape(-1)[flat])
        if val < best_val:
            best_val = val
            ik, it0, ip, its = np.unravel_index(flat, total_sse.shape)
            best_idx = (int(ik), ir, int(it0), int(ip), int(its))

    assert best_idx is not None
    ik, ir, it0, ip, its = best_idx
    return HypeParams(
        ScienceParams(float(k_ax[ik]), float(r_ax[ir]), float(t0_ax[it0])),
        TechParams(float(p_ax[ip]), float(ts_ax[its])),
    )

"""Closed-form curve identities and bin integrals."""

import math

import numpy as np
import pytest

from hypecurve.model import (
    PATENTS,
    PUBLICATIONS,
    HypeParams,
    ScienceParams,
    TechParams,
    bin_expected,
    cumulative,
    hype,
    patent_bins,
    patent_rate,
    pub_bins,
    pub_rate,
)

REF = HypeParams.from_values(k=4.0, r=1.0, t0=8.0, p=0.125, tstar=4.0)


def random_science(rng) -> ScienceParams:
    return ScienceParams(
        k=float(np.exp(rng.uniform(0.0, 13.0))),
        r=float(rng.uniform(0.05, 3.0)),
        t0=float(rng.uniform(1900.0, 2100.0)),
    )


class TestCumulative:
    def test_midpoint_is_half_capacity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            sp = random_science(rng)
            assert cumulative(sp.t0, sp) == pytest.approx(sp.k / 2.0, rel=1e-15)

    def test_saturation_limit(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            sp = random_science(rng)
            assert cumulative(sp.t0 + 40.0 / sp.r, sp) > 0.9999 * sp.k

    def test_reference_value_at_inflection(self):
        # k = 4 makes the peak rate k*r/4 equal 1; the midpoint is then 2.
        assert cumulative(8.0, REF.science) == 2.0

    def test_strictly_increasing_on_grid(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            sp = random_science(rng)
            t = np.linspace(sp.t0 - 25.0 / sp.r, sp.t0 + 25.0 / sp.r, 1501)
            values = np.array([cumulative(x, sp) for x in t])
            assert np.all(np.diff(values) > 0)


class TestPubRate:
    def test_peak_value(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            sp = random_science(rng)
            assert pub_rate(sp.t0, sp) == pytest.approx(sp.k * sp.r / 4.0, rel=1e-15)

    def test_reference_peak_normalized_to_one(self):
        assert pub_rate(8.0, REF.science) == 1.0

    @pytest.mark.parametrize("delta", [0.5, 1.0, 3.0, 10.0])
    def test_symmetry_about_inflection(self, delta):
        rng = np.random.default_rng(5)
        for _ in range(20):
            sp = random_science(rng)
            lhs = pub_rate(sp.t0 + delta, sp)
            rhs = pub_rate(sp.t0 - delta, sp)
            assert abs(lhs - rhs) <= 1e-12 * sp.k * sp.r

    def test_positive_in_resolvable_range(self):
        sp = ScienceParams(100.0, 0.5, 2000.0)
        for t in np.linspace(1950.0, 2050.0, 201):
            assert pub_rate(float(t), sp) > 0.0


class TestPatentRate:
    def test_shifted_midpoint(self):
        hp = HypeParams.from_values(1000.0, 0.7, 1995.0, 0.3, 6.0)
        value = patent_rate(hp.t0 + hp.tstar, hp)
        assert value == pytest.approx(hp.p * hp.k / 2.0, rel=1e-15)

    def test_reference_plateau_normalized_to_half(self):
        # p*k = 0.5 pins the technology plateau at half the publication peak.
        late = 8.0 + 4.0 + 30.0
        assert patent_rate(late, REF) == pytest.approx(0.5, rel=1e-6)

    def test_zero_delay_reduces_to_scaled_cumulative(self):
        hp = HypeParams.from_values(500.0, 1.2, 2005.0, 0.25, 0.0)
        for t in np.linspace(1995.0, 2015.0, 41):
            assert patent_rate(float(t), hp) == pytest.approx(
                hp.p * cumulative(float(t), hp.science), rel=1e-15
            )

    def test_strictly_increasing_on_grid(self):
        hp = HypeParams.from_values(2000.0, 0.8, 2000.0, 0.5, 5.0)
        t = np.linspace(1975.0, 2030.0, 1101)
        values = np.array([patent_rate(float(x), hp) for x in t])
        assert np.all(np.diff(values) > 0)


class TestHype:
    def test_definitional_sum(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            sp = random_science(rng)
            hp = HypeParams(sp, TechParams(float(np.exp(rng.uniform(-5, 2))), float(rng.uniform(-5, 20))))
            t = float(rng.uniform(sp.t0 - 30.0 / sp.r, sp.t0 + 30.0 / sp.r))
            assert hype(t, hp) == pub_rate(t, sp) + patent_rate(t, hp)

    def test_reference_plateau(self):
        t = 8.0 + 4.0 + 30.0
        assert 0.5 * (1 - 1e-3) <= hype(t, REF) <= 0.5 * (1 + 1e-3)

    def test_vanishes_far_before_trigger(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            sp = random_science(rng)
            hp = HypeParams(sp, TechParams(0.2, 5.0))
            assert hype(sp.t0 - 40.0 / sp.r, hp) < 1e-6 * sp.k * sp.r

    def test_overflow_safety_at_extreme_exponents(self):
        sp = ScienceParams(1e6, 3.0, 2000.0)
        hp = HypeParams(sp, TechParams(1.0, 4.0))
        for t in (2000.0 - 400.0, 2000.0 + 400.0):  # |r (t - t0)| = 1200
            assert math.isfinite(cumulative(t, sp))
            assert math.isfinite(pub_rate(t, sp))
            assert math.isfinite(hype(t, hp))


class TestBinExpected:
    def test_publications_bin_is_cumulative_increment(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            sp = random_science(rng)
            start = sp.t0 - 0.5
            expected = cumulative(start + 1.0, sp) - cumulative(start, sp)
            assert bin_expected(start, sp, PUBLICATIONS) == pytest.approx(expected, rel=1e-15)

    def test_publication_bins_total_capacity(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            sp = random_science(rng)
            starts = sp.t0 - 40.0 / sp.r + np.arange(int(math.ceil(80.0 / sp.r)))
            total = sum(bin_expected(float(y), sp, PUBLICATIONS) for y in starts)
            assert abs(total - sp.k) <= 1e-3 * sp.k

    def test_patents_bin_against_fine_step_quadrature(self):
        # Independent oracle: composite trapezoid at step 1e-4 over the rate.
        t = np.arange(20.0, 21.0 + 1e-12, 1e-4)
        rates = np.array([patent_rate(float(x), REF) for x in t])
        oracle = float(np.trapezoid(rates, t))
        value = bin_expected(20.0, REF, PATENTS)
        assert value == pytest.approx(oracle, abs=1e-9)
        # Frozen value from an offline high-precision computation.
        assert value == pytest.approx(0.4998939979084137, abs=1e-8)
        assert value == pytest.approx(0.5, abs=1e-3)

    def test_patents_bin_requires_full_params(self):
        with pytest.raises(TypeError):
            bin_expected(10.0, REF.science, PATENTS)

    def test_unknown_curve_rejected(self):
        with pytest.raises(ValueError):
            bin_expected(10.0, REF, "citations")


class TestBatchBins:
    """The vectorized bins must agree with the quadrature-backed scalar op."""

    def test_pub_bins_match_scalar(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            sp = random_science(rng)
            years = np.arange(math.floor(sp.t0) - 15, math.floor(sp.t0) + 15, dtype=float)
            batch = pub_bins(years, sp)
            scalar = np.array([bin_expected(float(y), sp, PUBLICATIONS) for y in years])
            np.testing.assert_allclose(batch, scalar, rtol=1e-9, atol=1e-12 * sp.k)

    def test_patent_bins_match_quadrature(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            sp = random_science(rng)
            hp = HypeParams(sp, TechParams(float(np.exp(rng.uniform(-4, 1))), float(rng.uniform(0, 10))))
            years = np.arange(math.floor(sp.t0) - 10, math.floor(sp.t0 + hp.tstar) + 12, dtype=float)
            batch = patent_bins(years, hp)
            scalar = np.array([bin_expected(float(y), hp, PATENTS) for y in years])
            np.testing.assert_allclose(batch, scalar, rtol=1e-7, atol=1e-12 * hp.p * hp.k)


class TestDifferentialIdentities:
    """The rate curve is the exact derivative of the cumulative curve, and
    the cumulative curve solves the saturating-growth differential law."""

    N_SETS = 1000

    def _sample(self, rng):
        sp = random_science(rng)
        t = sp.t0 + float(rng.uniform(-10.0, 10.0)) / sp.r
        return sp, t

    def test_growth_law_residual(self):
        rng = np.random.default_rng(12)
        h = 1e-5
        for _ in range(self.N_SETS):
            sp, t = self._sample(rng)
            deriv = (cumulative(t + h, sp) - cumulative(t - h, sp)) / (2.0 * h)
            c = cumulative(t, sp)
            law = sp.r * c * (sp.k - c) / sp.k
            assert deriv == pytest.approx(law, rel=1e-4)

    def test_rate_is_derivative_of_cumulative(self):
        rng = np.random.default_rng(13)
        h = 1e-5
        for _ in range(self.N_SETS):
            sp, t = self._sample(rng)
            deriv = (cumulative(t + h, sp) - cumulative(t - h, sp)) / (2.0 * h)
            assert deriv == pytest.approx(pub_rate(t, sp), rel=1e-4)

    def test_trapezoid_integral_of_rate_matches_increment(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            sp = random_science(rng)
            a = sp.t0 - float(rng.uniform(2.0, 15.0)) / sp.r
            b = sp.t0 + float(rng.uniform(2.0, 15.0)) / sp.r
            t = np.arange(a, b, 0.01 / sp.r)
            if t[-1] < b:
                t = np.append(t, b)
            rates = np.array([pub_rate(float(x), sp) for x in t])
            integral = float(np.trapezoid(rates, t))
            increment = cumulative(b, sp) - cumulative(a, sp)
            assert abs(integral - increment) <= 1e-4 * sp.k


class TestScaleEquivariance:
    def test_capacity_scaling_scales_all_curves(self):
        rng = np.random.default_rng(15)
        for _ in range(30):
            sp = random_science(rng)
            tech = TechParams(0.4, 6.0)
            hp = HypeParams(sp, tech)
            s = float(np.exp(rng.uniform(-2, 2)))
            scaled = HypeParams(ScienceParams(s * sp.k, sp.r, sp.t0), tech)
            t = float(rng.uniform(sp.t0 - 20.0 / sp.r, sp.t0 + 20.0 / sp.r))
            assert pub_rate(t, scaled.science) == pytest.approx(s * pub_rate(t, sp), rel=1e-12)
            assert patent_rate(t, scaled) == pytest.approx(s * patent_rate(t, hp), rel=1e-12)
            assert hype(t, scaled) == pytest.approx(s * hype(t, hp), rel=1e-12)


class TestParamValidation:
    @pytest.mark.parametrize("k,r,t0", [(0.0, 1.0, 0.0), (-1.0, 1.0, 0.0),
                                        (1.0, 0.0, 0.0), (1.0, -2.0, 0.0),
                                        (1.0, 1.0, math.inf), (math.nan, 1.0, 0.0)])
    def test_science_invariants(self, k, r, t0):
        with pytest.raises(ValueError):
            ScienceParams(k, r, t0)

    @pytest.mark.parametrize("p,tstar", [(0.0, 1.0), (-0.5, 1.0), (1.0, math.inf)])
    def test_tech_invariants(self, p, tstar):
        with pytest.raises(ValueError):
            TechParams(p, tstar)

    def test_negative_delay_is_representable(self):
        assert TechParams(0.5, -3.0).tstar == -3.0

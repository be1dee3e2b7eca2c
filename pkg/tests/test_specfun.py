"""Special-function kernel against frozen extended-precision references and
live independent oracles (mpmath direct summation, Mellin-Barnes contour)."""
import math
from fractions import Fraction

import numpy as np
import pytest

import oracles
from fsorf import specfun
from fsorf.specfun import (
    Accuracy,
    ConvergenceError,
    DegenerateParameterWarning,
    bessel_i,
    beta,
    gaussian_q,
    hyp2f2,
    log_gamma,
    meijer_g_3013,
    reg_lower_gamma,
)

# references computed with mpmath at 40 digits before the build
LOG_GAMMA_REF = {
    1e-3: 6.9071788853838536617,
    0.5: 0.57236494292470008707,
    10.3: 13.482036786138358593,
    171.6: 709.6573587630563213,
    1000.0: 5905.2204232091812118,
}


class TestLogGamma:
    def test_unit_value(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
        assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-15)

    def test_half(self):
        assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)

    @pytest.mark.parametrize("x,ref", sorted(LOG_GAMMA_REF.items()))
    def test_frozen(self, x, ref):
        assert log_gamma(x) == pytest.approx(ref, rel=1e-13)

    def test_domain(self):
        with pytest.raises(ValueError):
            log_gamma(0.0)
        with pytest.raises(ValueError):
            log_gamma(-2.5)

    def test_recurrence_grid(self):
        for x in np.geomspace(1e-3, 1e3, 61):
            lhs = log_gamma(x + 1.0)
            rhs = log_gamma(x) + math.log(x)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestRegLowerGamma:
    def test_zero(self):
        assert reg_lower_gamma(3.2, 0.0) == 0.0

    def test_exponential_cdf(self):
        assert reg_lower_gamma(1.0, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)

    def test_frozen_quadrature_oracle(self):
        assert reg_lower_gamma(3.7, 2.1) == pytest.approx(0.207709979677641191, rel=1e-13)
        assert reg_lower_gamma(0.5, 0.2) == pytest.approx(0.472910743134461915, rel=1e-13)

    def test_domain(self):
        with pytest.raises(ValueError):
            reg_lower_gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            reg_lower_gamma(1.0, -1.0)

    @pytest.mark.parametrize("s", [0.5, 1.0, 3.7, 12.0])
    def test_cdf_shape(self, s):
        grid = np.geomspace(1e-4, 1e3, 120)
        vals = [reg_lower_gamma(s, x) for x in grid]
        # leading order x^s / Gamma(s+1) at the small end
        lead = math.exp(s * math.log(grid[0]) - specfun.log_gamma(s + 1.0))
        assert vals[0] == pytest.approx(lead, rel=2e-4)
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)
        assert all(v2 >= v1 for v1, v2 in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)

    def test_log_variant_matches(self):
        for s, x in [(2.5, 0.3), (66.5, 1.8), (200.0, 40.0)]:
            lp = specfun.log_reg_lower_gamma(s, x)
            assert math.exp(lp) == pytest.approx(reg_lower_gamma(s, x), rel=1e-11)

    def test_log_variant_deep_underflow(self):
        lp = specfun.log_reg_lower_gamma(300.0, 1e-3)
        assert -math.inf < lp < -2000.0


class TestBeta:
    def test_unit(self):
        assert beta(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("u", [0.3, 1.0, 2.0, 17.5])
    def test_first_argument_one(self, u):
        assert beta(1.0, u) == pytest.approx(1.0 / u, rel=1e-13)

    def test_frozen(self):
        assert beta(2.5, 3.5) == pytest.approx(0.0368155389092553895, rel=1e-13)

    def test_domain(self):
        with pytest.raises(ValueError):
            beta(0.0, 1.0)


class TestHyp2F2:
    def test_zero_argument(self):
        assert hyp2f2(0.7, 1.9, 2.2, 3.1, 0.0) == 1.0

    def test_parameter_cancellation_gives_exp(self):
        for z in (-2.0, 0.4, 3.1):
            assert hyp2f2(1.3, 2.6, 1.3, 2.6, z) == pytest.approx(math.exp(z), rel=1e-11)

    def test_frozen_direct_summation(self):
        assert hyp2f2(1, 1, 2, 2, 0.35) == pytest.approx(1.09477845051056687, rel=1e-12)
        assert hyp2f2(1.5, 2.25, 3.5, 1.25, -2.0) == pytest.approx(
            0.223517839963064219, rel=1e-11
        )
        assert hyp2f2(2.0, 0.7, 1.1, 3.3, 5.5) == pytest.approx(
            23.0667562935652607, rel=1e-12
        )

    def test_pochhammer_terms_exact_rational(self):
        # first 20 terms at small integer parameters, exact arithmetic
        a1, a2, b1, b2 = 1, 2, 3, 4
        z = Fraction(1, 2)
        terms = [Fraction(1)]
        for n in range(19):
            terms.append(
                terms[-1] * (a1 + n) * (a2 + n) * z / ((b1 + n) * (b2 + n) * (n + 1))
            )
        # recompute with the implementation's recurrence in floats
        t = 1.0
        for n in range(19):
            t *= (a1 + n) * (a2 + n) / ((b1 + n) * (b2 + n)) * 0.5 / (n + 1)
            assert t == pytest.approx(float(terms[n + 1]), rel=1e-14)
        partial = float(sum(terms))
        full = hyp2f2(1.0, 2.0, 3.0, 4.0, 0.5)
        assert abs(full - partial) < 1e-12

    def test_nonpositive_denominator_rejected(self):
        with pytest.raises(ValueError):
            hyp2f2(1.0, 1.0, -2.0, 3.0, 0.5)

    def test_term_cap_carries_partial(self):
        with pytest.raises(ConvergenceError) as exc:
            hyp2f2(1.0, 1.0, 2.0, 2.0, 3.0, Accuracy(rel_tol=1e-12, max_terms=3))
        assert math.isfinite(exc.value.partial)

    def test_cancellation_guard(self):
        with pytest.raises(ConvergenceError):
            hyp2f2(5.0, 8.0, 6.0, 9.0, -60.0)


class TestBesselI:
    def test_at_zero(self):
        assert bessel_i(0.0, 0.0) == 1.0
        assert bessel_i(1.0, 0.0) == 0.0

    def test_frozen(self):
        assert bessel_i(0.0, 2.5) == pytest.approx(3.28983914405012304, rel=1e-12)
        ratio = bessel_i(1.0, 2.5) / bessel_i(0.0, 2.5)
        assert ratio == pytest.approx(0.764996747588809917, rel=1e-10)
        assert bessel_i(2.0, 47.0) == pytest.approx(1.44274792212905404e19, rel=1e-10)

    def test_scaled_large_argument(self):
        assert bessel_i(3.0, 700.0, scaled=True) == pytest.approx(
            0.0149845866617194387, rel=1e-8
        )

    def test_overflow_requires_scaled(self):
        with pytest.raises(OverflowError):
            bessel_i(0.0, 800.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_i(-1.0, 1.0)
        with pytest.raises(ValueError):
            bessel_i(0.5, -1.0)


class TestGaussianQ:
    def test_zero(self):
        assert gaussian_q(0.0) == 0.5

    def test_limits(self):
        assert gaussian_q(40.0) == pytest.approx(0.0, abs=1e-300)
        assert gaussian_q(-40.0) == pytest.approx(1.0, rel=1e-15)

    def test_frozen(self):
        assert gaussian_q(1.0) == pytest.approx(0.158655253931457051, rel=1e-14)

    def test_decreasing(self):
        xs = np.linspace(-6, 6, 41)
        qs = [gaussian_q(x) for x in xs]
        assert all(b < a for a, b in zip(qs, qs[1:]))


class TestMeijerG:
    XI2 = 1.44

    @pytest.mark.parametrize("at", [(2.064, 1.342), (2.296, 1.822), (2.902, 2.51)])
    def test_contour_oracle_log_grid(self, at):
        a, b = at
        for z in np.geomspace(1e-3, 10.0, 20):
            ref = oracles.mb_g3013(z, self.XI2 + 1.0, (self.XI2, a, b))
            got = meijer_g_3013(self.XI2 + 1.0, (self.XI2, a, b), z)
            assert got == pytest.approx(ref, rel=1e-8), f"z={z}"

    def test_small_argument_leading_power(self):
        # smallest pole family dominates: G -> C z^{b} with
        # C = Gamma(a-b) Gamma(xi2-b) / Gamma(xi2+1-b), at a rate set by the
        # next exponent gap (xi2 - b)
        a, b = 2.064, 1.342
        c_lead = math.exp(
            log_gamma(a - b) + log_gamma(self.XI2 - b) - log_gamma(self.XI2 + 1.0 - b)
        )
        gap = self.XI2 - b
        errs = []
        for z in (1e-6, 1e-8, 1e-10):
            g = meijer_g_3013(self.XI2 + 1.0, (self.XI2, a, b), z)
            ratio = g / z ** b
            errs.append(abs(ratio - c_lead) / c_lead)
            assert errs[-1] < 2.0 * z ** gap
        assert errs[0] > errs[1] > errs[2]

    def test_degenerate_spacing_warns(self):
        with pytest.warns(DegenerateParameterWarning):
            meijer_g_3013(2.44, (1.44, 2.44, 1.9), 0.5)

    def test_domain(self):
        with pytest.raises(ValueError):
            meijer_g_3013(2.44, (1.44, 2.064, 1.342), 0.0)

    def test_cancellation_ceiling_raises(self):
        with pytest.raises(ConvergenceError):
            meijer_g_3013(2.44, (1.44, 2.064, 1.342), 400.0)

    def test_purity(self):
        args = (2.44, (1.44, 2.296, 1.822), 0.37)
        assert meijer_g_3013(*args) == meijer_g_3013(*args)

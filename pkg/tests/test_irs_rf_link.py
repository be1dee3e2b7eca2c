"""Reflector-cascade statistics: trig moments, amplitude moments, surrogate
fit, and the accumulated Gamma law, cross-checked by sampling."""
import math

import numpy as np
import pytest
from scipy.stats import kstest

import oracles
from fsorf.irs_rf_link import (
    AccumulatedRfSnr,
    IrsParams,
    NakagamiFit,
    RfLinkConfig,
    cascade_amplitude_moments,
    fit_nakagami,
    rd_round_pdf,
    sample_cascade_power,
    sample_rf_snr,
    von_mises_trig_moment,
    zrd_accumulated,
)
from fsorf.montecarlo import estimate_moments
from fsorf.specfun import reg_lower_gamma

IRS_REF = IrsParams(m_reflectors=128, kappa=2.0, rician_k=2.0)

# frozen from the extended-precision Bessel-integral oracles
RICIAN_K2 = {1: 0.9276966497874768, 2: 1.0, 3: 1.197210179222198, 4: 14.0 / 9.0}
TRIG_K2 = {1: 0.697774657964008, 2: 0.302225342035992,
           3: 0.09332397389202395, 4: 0.02225342035992018}


class TestTypes:
    def test_irs_validation(self):
        with pytest.raises(ValueError):
            IrsParams(m_reflectors=0, kappa=1.0)
        with pytest.raises(ValueError):
            IrsParams(m_reflectors=4, kappa=-1.0)
        with pytest.raises(ValueError):
            IrsParams(m_reflectors=4, kappa=1.0, delta=1.5)

    def test_fit_validation(self):
        with pytest.raises(ValueError):
            NakagamiFit(-1.0, 0.5)

    def test_rf_config_mean(self):
        cfg = RfLinkConfig.from_mean_snr_db(IRS_REF, 50.0, 2)
        assert cfg.mean_snr == pytest.approx(1e5, rel=1e-12)
        assert cfg.mean_snr == pytest.approx(
            IRS_REF.m_reflectors ** 2 * 10 ** (cfg.gamma0_db / 10.0), rel=1e-12
        )

    def test_pathloss_mode(self):
        on = RfLinkConfig.from_mean_snr_db(IRS_REF, 50.0, 2, apply_pathloss=True)
        off = RfLinkConfig.from_mean_snr_db(IRS_REF, 50.0, 2)
        nu = IRS_REF.pathloss_exp
        assert on.mean_snr == pytest.approx(off.mean_snr * (10.0 * 10.0) ** (-nu))


class TestTrigMoment:
    def test_uniform_phase(self):
        assert von_mises_trig_moment(0.0) == 0.0

    def test_perfect_estimation_limit(self):
        assert von_mises_trig_moment(1e4) == pytest.approx(1.0, abs=1e-4)
        assert von_mises_trig_moment(1e4) < 1.0

    @pytest.mark.parametrize("p,ref", sorted(TRIG_K2.items()))
    def test_frozen(self, p, ref):
        assert von_mises_trig_moment(2.0, p) == pytest.approx(ref, rel=1e-10)

    def test_monotone_in_kappa(self):
        vals = [von_mises_trig_moment(k) for k in (0.0, 0.5, 1.0, 2.0, 5.0, 50.0, 700.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_sampled_cosine(self):
        rng = np.random.default_rng(31)
        th = rng.vonmises(0.0, 2.0, 1_000_000)
        c = np.cos(th)
        se = c.std() / math.sqrt(len(c))
        assert abs(c.mean() - TRIG_K2[1]) < 4.0 * se


class TestAmplitudeMoments:
    def test_rayleigh_factors(self):
        # unit-power Rayleigh: E[b] = sqrt(pi)/2, E[b^2] = 1, E[b^4] = 2
        irs = IrsParams(m_reflectors=4, kappa=1.0, rician_k=0.0)
        am = cascade_amplitude_moments(irs)
        ray1 = math.sqrt(math.pi) / 2.0
        assert am.m1 == pytest.approx(ray1 * ray1, rel=1e-12)   # both hops Rayleigh
        assert am.m2 == pytest.approx(1.0, rel=1e-12)
        assert am.m4 == pytest.approx(4.0, rel=1e-12)

    def test_frozen_rician_k2(self):
        am = cascade_amplitude_moments(IRS_REF)
        g = {n: math.gamma(1.0 + n / 2.0) for n in (1, 2, 3, 4)}
        for n, ref in RICIAN_K2.items():
            got = [am.m1, am.m2, am.m3, am.m4][n - 1]
            assert got == pytest.approx(ref * g[n], rel=1e-11)

    def test_delta_scaling(self):
        lo = cascade_amplitude_moments(IrsParams(4, 1.0, 2.0, delta=0.5))
        hi = cascade_amplitude_moments(IrsParams(4, 1.0, 2.0, delta=1.0))
        for n, (a, b) in enumerate(zip(lo, hi), start=1):
            assert a == pytest.approx(b * 0.5 ** n, rel=1e-12)

    def test_sampled_first_moment(self):
        rng = np.random.default_rng(55)
        n = 2_000_000
        k = 2.0
        s = math.sqrt(k / (k + 1)); sig = math.sqrt(1 / (2 * (k + 1)))
        al = np.abs(s + sig * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        be = np.sqrt(0.5) * np.abs(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        amp = al * be
        se = amp.std() / math.sqrt(n)
        ref = cascade_amplitude_moments(IRS_REF).m1
        assert abs(amp.mean() - ref) < 4.0 * se


class TestFitNakagami:
    def test_frozen_reference(self):
        fit = fit_nakagami(IRS_REF)
        assert fit.m_shape == pytest.approx(33.23945039671522, rel=1e-10)
        assert fit.mu2 == pytest.approx(0.3343446848156603, rel=1e-10)

    def test_uniform_phase_is_rayleigh_like(self):
        fit = fit_nakagami(IrsParams(m_reflectors=128, kappa=0.0, rician_k=2.0))
        assert fit.m_shape == pytest.approx(1.0, abs=0.02)
        assert fit.mu2 == pytest.approx(1.0 / 128.0, rel=1e-9)

    def test_sharper_phase_raises_shape(self):
        m0 = fit_nakagami(IrsParams(128, 0.0, 2.0)).m_shape
        m10 = fit_nakagami(IrsParams(128, 10.0, 2.0)).m_shape
        assert m10 > m0

    def test_shape_invariant_to_amplitude_scale(self):
        a = fit_nakagami(IrsParams(64, 1.5, 2.0, delta=1.0))
        b = fit_nakagami(IrsParams(64, 1.5, 2.0, delta=0.37))
        assert b.m_shape == pytest.approx(a.m_shape, rel=1e-9)
        assert b.mu2 == pytest.approx(a.mu2 * 0.37 ** 2, rel=1e-9)

    def test_power_moments_vs_sampling(self):
        irs = IrsParams(m_reflectors=64, kappa=1.0, rician_k=2.0)
        fit = fit_nakagami(irs)
        est = estimate_moments(irs, 400_000, 2024)
        assert abs(est.power2 - fit.mu2) < 4.0 * est.power2_std_err
        expected_p4 = fit.mu2 ** 2 * (1.0 + 1.0 / fit.m_shape)
        assert abs(est.power4 - expected_p4) < 4.0 * est.power4_std_err

    def test_reference_power_moments_vs_sampling(self):
        fit = fit_nakagami(IRS_REF)
        est = estimate_moments(IRS_REF, 300_000, 91)
        assert abs(est.power2 - fit.mu2) < 4.0 * est.power2_std_err

    def test_surrogate_ks_distance(self):
        # distribution distance between the fitted envelope law and the
        # sampled cascade amplitude at the reference geometry
        fit = fit_nakagami(IRS_REF)
        rng = np.random.default_rng(404)
        amp = np.sqrt(sample_cascade_power(IRS_REF, rng, 100_000))
        cdf = lambda x: np.array(
            [reg_lower_gamma(fit.m_shape, fit.m_shape * v * v / fit.mu2) for v in np.atleast_1d(x)]
        )
        stat = kstest(amp, cdf).statistic
        assert stat < 0.01

    def test_single_reflector_flagged(self):
        with pytest.warns(UserWarning):
            fit_nakagami(IrsParams(m_reflectors=1, kappa=2.0))


class TestRoundPdfAndAccumulated:
    CFG = RfLinkConfig.from_mean_snr_db(IRS_REF, 20.0, 2)

    def test_round_pdf_normalization_and_mean(self):
        from scipy.integrate import quad
        fit = fit_nakagami(IRS_REF)
        gbar = self.CFG.mean_snr
        total, _ = quad(lambda g: rd_round_pdf(self.CFG, g, fit), 0, 6 * gbar, limit=300)
        mean, _ = quad(lambda g: g * rd_round_pdf(self.CFG, g, fit), 0, 8 * gbar, limit=300)
        assert total == pytest.approx(1.0, abs=1e-10)
        assert mean == pytest.approx(gbar, rel=1e-9)

    def test_round_pdf_matches_sampled_histogram(self):
        fit = fit_nakagami(IRS_REF)
        rng = np.random.default_rng(11)
        snr = sample_rf_snr(self.CFG, rng, 100_000, fit=fit)
        cdf = lambda x: np.array(
            [reg_lower_gamma(fit.m_shape, fit.m_shape * v / self.CFG.mean_snr)
             for v in np.atleast_1d(x)]
        )
        stat = kstest(snr, cdf).statistic
        assert stat < 0.01

    def test_accumulated_is_gamma_sum(self):
        zrd = zrd_accumulated(self.CFG)
        fit = zrd.fit
        assert zrd.shape == pytest.approx(fit.m_shape * 2)
        assert zrd.mgf(0.0) == 1.0

    def test_single_round_reduction(self):
        cfg1 = RfLinkConfig.from_mean_snr_db(IRS_REF, 20.0, 1)
        zrd = zrd_accumulated(cfg1)
        fit = zrd.fit
        for t in (10.0, 50.0, 150.0):
            assert zrd.pdf(t) == pytest.approx(rd_round_pdf(cfg1, t, fit), rel=1e-12)

    def test_cdf_vs_two_round_sampling(self):
        zrd = zrd_accumulated(self.CFG)
        fit = zrd.fit
        rng = np.random.default_rng(12)
        n = 1_000_000
        z = sample_rf_snr(self.CFG, rng, n, fit=fit, surrogate=True) + sample_rf_snr(
            self.CFG, rng, n, fit=fit, surrogate=True
        )
        for t_frac in (0.85, 1.0, 1.15, 1.4):
            t = t_frac * 2 * self.CFG.mean_snr
            p = float((z <= t).mean())
            se = math.sqrt(p * (1 - p) / n)
            assert abs(zrd.cdf(t) - p) < 3.0 * se

    def test_cdf_quadrature_oracle(self):
        zrd = zrd_accumulated(self.CFG)
        t = 1.4 * self.CFG.mean_snr
        ref = oracles.mp_reg_lower_gamma_quad(zrd.shape, zrd.rate * t)
        assert zrd.cdf(t) == pytest.approx(ref, rel=1e-11)

    def test_mgf_completely_monotone_grid(self):
        zrd = zrd_accumulated(self.CFG)
        s = np.linspace(0.0, 0.5 / self.CFG.mean_snr * 40, 60)
        vals = np.array([zrd.mgf(v) for v in s])
        assert np.all(vals > 0)
        d1 = np.diff(vals)
        assert np.all(d1 < 0)
        assert np.all(np.diff(d1) > 0)

    def test_pdf_integrates_to_one(self):
        from scipy.integrate import quad
        zrd = zrd_accumulated(self.CFG)
        hi = 4.0 * 2 * self.CFG.mean_snr
        total, _ = quad(zrd.pdf, 0.0, hi, limit=300)
        assert total == pytest.approx(1.0, abs=1e-8)


class TestExactVsSurrogate:
    def test_cascade_scale_invariance(self):
        # the cascade SNR law is a pure scale family in the mean, so one
        # scale exercises every mean; checked algebraically on the law
        lo = zrd_accumulated(RfLinkConfig.from_mean_snr_db(IRS_REF, 20.0, 2))
        hi = zrd_accumulated(RfLinkConfig.from_mean_snr_db(IRS_REF, 40.0, 2))
        for t in (30.0, 100.0, 300.0):
            assert lo.cdf(t) == pytest.approx(hi.cdf(t * 100.0), rel=1e-9)

    def test_deep_quantile_agreement(self):
        # exact-cascade sampling vs the fitted law where the CDF is ~1e-2:
        # the central-limit surrogate must track within 10% relative
        cfg = RfLinkConfig.from_mean_snr_db(IRS_REF, 30.0, 2)
        zrd = zrd_accumulated(cfg)
        rng = np.random.default_rng(3003)
        n = 400_000
        z = sample_rf_snr(cfg, rng, n, fit=zrd.fit) + sample_rf_snr(
            cfg, rng, n, fit=zrd.fit
        )
        for q in (0.01, 0.05, 0.2, 0.5):
            t = float(np.quantile(z, q))
            got = zrd.cdf(t)
            se = math.sqrt(q * (1 - q) / n)
            assert abs(got - q) <= 0.10 * q + 3.0 * se

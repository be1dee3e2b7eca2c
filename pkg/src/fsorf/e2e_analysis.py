"""End-to-end outage and packet-error analysis for the two-hop link.

The relay decodes and forwards, so the end-to-end SNR is the minimum of
the two accumulated hop SNRs and its CDF combines the hop CDFs by
inclusion-exclusion: F = F1 + F2 - F1 F2.  Outage compares the combined
CDF against the rate threshold 2^R - 1.  Packet error rate uses the
waterfall approximation: the instantaneous packet-error curve g(snr) is
replaced by a unit step at its own integral T0, making PER the combined
CDF at T0.  Both a direct evaluation and an independently assembled
termwise decomposition (J1 + J2 - J3 - J4) are provided; their agreement
is a guardrail the tests enforce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.integrate import quad

from . import specfun
from ._powser import EVAL_ACCURACY
from .fso_link import (
    FsoLinkConfig,
    GenPowerSeries,
    accumulated_cdf,
    accumulated_pdf,
    leading_order_series,
)
from .irs_rf_link import AccumulatedRfSnr, RfLinkConfig, zrd_accumulated
from .specfun import Accuracy

__all__ = [
    "HarqConfig",
    "PerConfig",
    "E2eResult",
    "PerBreakdown",
    "equivalent_cdf",
    "equivalent_pdf",
    "outage_probability",
    "waterfall_threshold",
    "per_closed_form",
    "asymptotic_op",
    "diversity_gain",
]


@dataclass(frozen=True)
class HarqConfig:
    """Round budgets for both hops and the rate threshold in bits/s/Hz."""

    rounds_n1: int
    rounds_n2: int
    rate_bpshz: float

    def __post_init__(self):
        if self.rounds_n1 < 1 or self.rounds_n2 < 1:
            raise ValueError(f"round counts must be >= 1, got {self}")
        if not self.rate_bpshz > 0.0:
            raise ValueError(f"rate must be positive, got {self.rate_bpshz}")

    @property
    def snr_threshold(self) -> float:
        """Outage threshold 2^R - 1 (linear SNR)."""
        return 2.0 ** self.rate_bpshz - 1.0


@dataclass
class PerConfig:
    """Packet model for the waterfall approximation.

    Only uncoded BPSK is wired up (bit error rate Q(sqrt(2 snr))); the
    modulation tag exists so a coded model can slot in without an API
    change.  ``t0_cache`` memoizes the threshold.
    """

    packet_bits: int
    modulation: str = "bpsk-uncoded"
    t0_cache: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.packet_bits < 1:
            raise ValueError(f"packet_bits must be >= 1, got {self.packet_bits}")
        if self.modulation != "bpsk-uncoded":
            raise ValueError(f"unsupported modulation {self.modulation!r}")


@dataclass(frozen=True)
class E2eResult:
    """Outage evaluation with its per-hop components."""

    op: float
    p_out_sr: float
    p_out_rd: float
    diversity: float
    snr_threshold: float


@dataclass(frozen=True)
class PerBreakdown:
    """Packet error rate via both evaluation routes.

    ``value`` is the direct route F1(T0) + F2(T0) - F1(T0) F2(T0);
    ``fidelity`` reassembles the same quantity termwise as J1+J2-J3-J4
    with hypergeometric and incomplete-gamma kernels.
    """

    value: float
    fidelity: float
    j1: float
    j2: float
    j3: float
    j4: float
    t0: float
    f_sr_t0: float
    f_rd_t0: float


def packet_error_instantaneous(snr: float, packet_bits: int) -> float:
    """g(snr) = 1 - (1 - Pb)^L for uncoded BPSK, Pb = Q(sqrt(2 snr))."""
    pb = specfun.gaussian_q(math.sqrt(2.0 * snr)) if snr > 0.0 else 0.5
    if pb >= 1.0:
        return 1.0
    return -math.expm1(packet_bits * math.log1p(-pb))


def waterfall_threshold(per_cfg: PerConfig) -> float:
    """T0 = integral of the instantaneous packet-error curve over SNR.

    Adaptive quadrature split at the waterfall knee; the integrand is 1
    near zero and decays like L e^{-snr} past the knee, so the upper limit
    ln(L) + 40 leaves a tail below 1e-12.
    """
    if per_cfg.t0_cache is not None:
        return per_cfg.t0_cache
    L = per_cfg.packet_bits
    knee = 0.5 * _q_inverse(min(0.5, 1.0 / L)) ** 2
    upper = math.log(L) + 40.0 if L > 1 else 40.0
    val = 0.0
    for lo, hi in ((0.0, knee), (knee, upper)):
        if hi <= lo:
            continue
        piece, err = quad(
            packet_error_instantaneous,
            lo,
            hi,
            args=(L,),
            limit=300,
            epsabs=1e-14,
            epsrel=1e-13,
        )
        if abs(err) > 1e-8 * max(val + piece, 1.0):
            raise ArithmeticError(
                f"threshold quadrature error {err:.2e} too large for L={L}"
            )
        val += piece
    per_cfg.t0_cache = val
    return val


def _q_inverse(p: float) -> float:
    # bisection on the decreasing tail function; ample for a split point
    lo, hi = 0.0, 42.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if specfun.gaussian_q(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equivalent_cdf(
    fso_series: GenPowerSeries,
    rf: RfLinkConfig | AccumulatedRfSnr,
    snr: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """CDF of min(accumulated optical SNR, accumulated RF SNR)."""
    if snr < 0.0:
        raise ValueError(f"snr must be >= 0, got {snr}")
    zrd = rf if isinstance(rf, AccumulatedRfSnr) else zrd_accumulated(rf)
    f1 = accumulated_cdf(fso_series, snr, accuracy)
    f2 = zrd.cdf(snr)
    return min(1.0, f1 + f2 - f1 * f2)


def equivalent_pdf(
    fso_series: GenPowerSeries,
    rf: RfLinkConfig | AccumulatedRfSnr,
    snr: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """Density of the end-to-end SNR: f1 + f2 - f1 F2 - F1 f2."""
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr}")
    zrd = rf if isinstance(rf, AccumulatedRfSnr) else zrd_accumulated(rf)
    f1 = accumulated_pdf(fso_series, snr, accuracy)
    f2 = zrd.pdf(snr)
    c1 = accumulated_cdf(fso_series, snr, accuracy)
    c2 = zrd.cdf(snr)
    return max(0.0, f1 + f2 - f1 * c2 - c1 * f2)


def outage_probability(
    fso_series: GenPowerSeries,
    rf: RfLinkConfig,
    harq: HarqConfig,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> E2eResult:
    """Probability that the combined accumulated SNR misses 2^R - 1.

    Strictly decreasing in either hop's mean SNR.  The series must have
    been accumulated over harq.rounds_n1 rounds and the RF config must
    carry harq.rounds_n2; mismatches raise.
    """
    if fso_series.rounds != harq.rounds_n1:
        raise ValueError(
            f"series accumulates {fso_series.rounds} rounds, config says "
            f"{harq.rounds_n1}"
        )
    if rf.rounds_n2 != harq.rounds_n2:
        raise ValueError(
            f"RF config has {rf.rounds_n2} rounds, config says {harq.rounds_n2}"
        )
    gth = harq.snr_threshold
    zrd = zrd_accumulated(rf)
    f1 = accumulated_cdf(fso_series, gth, accuracy)
    f2 = zrd.cdf(gth)
    return E2eResult(
        op=min(1.0, f1 + f2 - f1 * f2),
        p_out_sr=f1,
        p_out_rd=f2,
        diversity=_diversity_from_series(fso_series),
        snr_threshold=gth,
    )


def _diversity_from_series(series: GenPowerSeries) -> float:
    rec = series.recipe
    return series.rounds * min(rec.xi2, rec.a, rec.b) / rec.r


def diversity_gain(fso_cfg: FsoLinkConfig, harq: HarqConfig) -> float:
    """High-SNR log-log outage slope: N1 min(xi2, a, b) / r.

    A function of the optical hop and its round budget only; no RF
    parameter enters.
    """
    return (
        harq.rounds_n1
        * min(fso_cfg.point.xi2, fso_cfg.turb.a, fso_cfg.turb.b)
        / fso_cfg.r
    )


def asymptotic_op(
    fso_cfg: FsoLinkConfig,
    harq: HarqConfig,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """High-SNR outage approximation.

    The RF contribution vanishes faster than any optical branch, and
    within each optical branch only the lowest-order coefficient matters,
    so the result keeps exactly one term per round-assignment branch.
    """
    lead = leading_order_series(fso_cfg, harq.rounds_n1)
    return accumulated_cdf(lead, harq.snr_threshold, accuracy)


# ---------------------------------------------------------------------------
# packet error rate
# ---------------------------------------------------------------------------

def per_closed_form(
    fso_series: GenPowerSeries,
    rf: RfLinkConfig,
    per_cfg: PerConfig,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> PerBreakdown:
    """PER under the waterfall step model, with both assembly routes.

    Direct route: F1(T0) + F2(T0) - F1(T0) F2(T0), the exact integral of
    the equivalent density over (0, T0).  Termwise route: J1 and J2 are
    the hop CDFs; J3 integrates each optical series term against the RF
    CDF, which for a term z^(rho-1) against Gamma(shape sigma, rate mu) is

        mu^sigma T^(rho+sigma) / (sigma Gamma(sigma) (rho+sigma))
            * 2F2(sigma, rho+sigma; sigma+1, rho+sigma+1; -mu T)

    and J4 integrates each term's CDF against the RF density, giving a
    regularized lower-incomplete-gamma kernel P(rho+sigma, mu T) scaled by
    Gamma(rho+sigma)/(Gamma(rho) rho mu^rho ...) per term.
    """
    t0 = waterfall_threshold(per_cfg)
    zrd = zrd_accumulated(rf)
    f1 = accumulated_cdf(fso_series, t0, accuracy)
    f2 = zrd.cdf(t0)
    value = min(1.0, f1 + f2 - f1 * f2)

    sigma = zrd.shape
    mu = zrd.rate
    x = mu * t0
    lg_sigma = specfun.log_gamma(sigma)
    gbar1 = fso_series.domain_scale
    lt0 = math.log(t0 / gbar1)

    j3 = 0.0
    j4 = 0.0
    for e, coeffs in fso_series.terms:
        b3 = b4 = 0.0
        quiet = 0
        for n, c in enumerate(coeffs):
            if c == 0.0:
                continue
            rho = e + n
            lbase = math.log(abs(c)) + rho * lt0
            if lbase < -740.0:
                continue
            base = math.copysign(math.exp(lbase), c)
            # J3 kernel
            l3 = sigma * math.log(x) - lg_sigma - math.log(sigma) - math.log(rho + sigma)
            if l3 > -740.0:
                h = specfun.hyp2f2(
                    sigma, rho + sigma, sigma + 1.0, rho + sigma + 1.0, -x, accuracy
                )
                t3 = base * math.exp(l3) * h
            else:
                t3 = 0.0
            # J4 kernel: (1/rho) * Gamma(rho+sigma)/(Gamma(rho+... )) ...
            lp = specfun.log_reg_lower_gamma(rho + sigma, x)
            l4 = (
                specfun.log_gamma(rho + sigma)
                - lg_sigma
                - rho * math.log(x)
                - math.log(rho)
                + lp
            )
            t4 = base * math.exp(l4) if l4 > -740.0 else 0.0
            b3 += t3
            b4 += t4
            if abs(t3) < accuracy.rel_tol * max(abs(b3), 1e-300) and abs(
                t4
            ) < accuracy.rel_tol * max(abs(b4), 1e-300):
                quiet += 1
                if quiet >= 3:
                    break
            else:
                quiet = 0
        j3 += b3
        j4 += b4

    fidelity = f1 + f2 - j3 - j4
    return PerBreakdown(
        value=value,
        fidelity=min(1.0, max(0.0, fidelity)),
        j1=f1,
        j2=f2,
        j3=j3,
        j4=j4,
        t0=t0,
        f_sr_t0=f1,
        f_rd_t0=f2,
    )

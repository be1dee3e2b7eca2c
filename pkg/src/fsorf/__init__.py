"""Closed-form outage and packet-error analysis for a dual-hop link that
carries traffic over a turbulent optical channel into a decode-and-forward
relay and onward over a reflector-array RF channel, with chase-combining
retransmissions on both hops, validated end to end against a coupled
Monte-Carlo simulator."""

__version__ = "0.1.0"

from .e2e_analysis import (
    E2eResult,
    HarqConfig,
    PerBreakdown,
    PerConfig,
    asymptotic_op,
    diversity_gain,
    equivalent_cdf,
    equivalent_pdf,
    outage_probability,
    per_closed_form,
    waterfall_threshold,
)
from .fso_link import (
    DetectionMode,
    FsoLinkConfig,
    GenPowerSeries,
    PointingParams,
    TurbulenceParams,
    accumulate_rounds,
    accumulated_cdf,
    accumulated_pdf,
    composite_pdf,
    path_loss_beer_lambert,
    sample_irradiance,
    single_round_series,
)
from .irs_rf_link import (
    AccumulatedRfSnr,
    IrsParams,
    NakagamiFit,
    RfLinkConfig,
    cascade_amplitude_moments,
    fit_nakagami,
    rd_round_pdf,
    sample_rf_snr,
    von_mises_trig_moment,
    zrd_accumulated,
)
from .montecarlo import McEstimate, MomentEstimate, estimate_moments, simulate_outage, simulate_per

__all__ = [
    "__version__",
    "TurbulenceParams", "PointingParams", "DetectionMode", "FsoLinkConfig",
    "GenPowerSeries", "composite_pdf", "sample_irradiance",
    "single_round_series", "accumulate_rounds", "accumulated_cdf",
    "accumulated_pdf", "path_loss_beer_lambert",
    "IrsParams", "NakagamiFit", "RfLinkConfig", "AccumulatedRfSnr",
    "von_mises_trig_moment", "cascade_amplitude_moments", "fit_nakagami",
    "rd_round_pdf", "zrd_accumulated", "sample_rf_snr",
    "HarqConfig", "PerConfig", "E2eResult", "PerBreakdown",
    "equivalent_cdf", "equivalent_pdf", "outage_probability",
    "waterfall_threshold", "per_closed_form", "asymptotic_op",
    "diversity_gain",
    "McEstimate", "MomentEstimate", "simulate_outage", "simulate_per",
    "estimate_moments",
]

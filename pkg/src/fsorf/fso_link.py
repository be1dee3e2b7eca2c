"""Optical hop: irradiance model, composite density, accumulated-SNR series.

The channel gain is h = h_l * h_a * h_p with a unit-mean Gamma-Gamma
turbulence factor h_a, a misalignment factor h_p with CDF (x/A0)^xi2 on
(0, A0], and a deterministic attenuation h_l.  Per-round SNR follows
gamma = mean_snr * (h / E[h])^r where r selects the detection front end
(1 coherent, 2 direct detection), and chase combining adds the per-round
SNRs of independent rounds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from ._powser import (
    EVAL_ACCURACY,
    GenPowerSeries,
    SeriesRecipe,
    convolve,
    series_cdf,
    series_pdf,
    snr_series_branches,
    truncate_series,
)
from .specfun import Accuracy, DEFAULT_ACCURACY

__all__ = [
    "TurbulenceParams",
    "PointingParams",
    "DetectionMode",
    "FsoLinkConfig",
    "GenPowerSeries",
    "composite_pdf",
    "sample_irradiance",
    "single_round_series",
    "accumulate_rounds",
    "accumulated_cdf",
    "accumulated_pdf",
    "path_loss_beer_lambert",
]


@dataclass(frozen=True)
class TurbulenceParams:
    """Gamma-Gamma shape pair: large-scale a, small-scale b."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError(f"turbulence shapes must be positive, got {self}")

    @classmethod
    def strong(cls) -> "TurbulenceParams":
        return cls(2.064, 1.342)

    @classmethod
    def moderate(cls) -> "TurbulenceParams":
        return cls(2.296, 1.822)

    @classmethod
    def weak(cls) -> "TurbulenceParams":
        return cls(2.902, 2.51)


@dataclass(frozen=True)
class PointingParams:
    """Misalignment severity xi2 (= xi^2) and power-collection cap A0."""

    xi2: float
    A0: float = 1.0

    def __post_init__(self):
        if not self.xi2 > 0.0:
            raise ValueError(f"xi2 must be positive, got {self.xi2}")
        if not 0.0 < self.A0 <= 1.0:
            raise ValueError(f"A0 must lie in (0, 1], got {self.A0}")

    @classmethod
    def from_xi(cls, xi: float, A0: float = 1.0) -> "PointingParams":
        return cls(xi * xi, A0)

    @property
    def mean_collection(self) -> float:
        """E[h_p] = A0 xi2 / (xi2 + 1)."""
        return self.A0 * self.xi2 / (self.xi2 + 1.0)


class DetectionMode(enum.IntEnum):
    """Detection front end; the value is the SNR exponent r."""

    HETERODYNE = 1
    IM_DD = 2

    @property
    def r(self) -> int:
        return int(self.value)

    @classmethod
    def parse(cls, text: str) -> "DetectionMode":
        key = str(text).strip().lower()
        table = {
            "hd": cls.HETERODYNE,
            "heterodyne": cls.HETERODYNE,
            "1": cls.HETERODYNE,
            "imdd": cls.IM_DD,
            "im/dd": cls.IM_DD,
            "im_dd": cls.IM_DD,
            "2": cls.IM_DD,
        }
        if key not in table:
            raise ValueError(f"unknown detection mode {text!r}")
        return table[key]


@dataclass(frozen=True)
class FsoLinkConfig:
    """Optical-hop configuration.

    ``mean_snr_db`` is the per-round mean SNR (eta_e E[h])^r / noise_var in
    dB at unit path loss; an explicit ``path_loss`` multiplies the channel
    gain and therefore scales the effective mean SNR by path_loss^r.
    """

    turb: TurbulenceParams
    point: PointingParams
    detection: DetectionMode
    mean_snr_db: float
    rounds_n1: int
    path_loss: float = 1.0
    oe_gain: float = 1.0
    noise_var: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mean_snr_db):
            raise ValueError(f"mean_snr_db must be finite, got {self.mean_snr_db}")
        if self.rounds_n1 < 1:
            raise ValueError(f"rounds_n1 must be >= 1, got {self.rounds_n1}")
        if not 0.0 < self.path_loss <= 1.0:
            raise ValueError(f"path_loss must lie in (0, 1], got {self.path_loss}")
        if self.oe_gain <= 0.0 or self.noise_var <= 0.0:
            raise ValueError("oe_gain and noise_var must be positive")

    @property
    def r(self) -> int:
        return self.detection.r

    @property
    def mean_snr(self) -> float:
        """Effective per-round mean SNR, linear, attenuation folded in."""
        return 10.0 ** (self.mean_snr_db / 10.0) * self.path_loss ** self.r

    @property
    def mean_irradiance(self) -> float:
        """E[h] = h_l E[h_a] E[h_p] with E[h_a] = 1."""
        return self.path_loss * self.point.mean_collection


# ---------------------------------------------------------------------------
# composite irradiance density
# ---------------------------------------------------------------------------

# Crossover (in w = a b h / A0) from residue branches to the Bessel-integral
# representation of the same function; both are ~1e-8 accurate in the
# overlap window and tests pin their agreement.
_W_SWITCH = 20.0


def _bessel_k_scaled(order: float, x: float) -> float:
    """e^x K_nu(x) for x > 0; I-difference below x=8, Hankel series above."""
    nu = abs(order)
    if x < 8.0:
        frac = nu - round(nu)
        if abs(frac) < 1e-6:
            # kill the sin(pi nu) pole by nudging the order; error O(1e-6)
            nu = round(nu) + math.copysign(1e-6, frac if frac != 0.0 else 1.0)
        i_pos = specfun.bessel_i(nu, x)
        i_neg = _bessel_i_negative(nu, x)
        return math.pi * (i_neg - i_pos) / (2.0 * math.sin(math.pi * nu)) * math.exp(x)
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    best = 1.0
    for k in range(1, 40):
        term *= (mu - (2.0 * k - 1.0) ** 2) / (8.0 * x * k)
        if abs(term) >= best:
            break
        best = abs(term)
        total += term
    return math.sqrt(math.pi / (2.0 * x)) * total


def _bessel_i_negative(nu: float, x: float) -> float:
    # ascending series for I_{-nu}(x), nu non-integer
    lt0 = -nu * math.log(x / 2.0)
    lg, sg = specfun.signed_log_gamma(1.0 - nu)
    term = sg * math.exp(lt0 - lg)
    total = term
    q = x * x / 4.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (k - nu))
        total += term
        if abs(term) < abs(total) * 1e-17 or k > 20000:
            return total


_LAGUERRE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _laggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _LAGUERRE_CACHE:
        _LAGUERRE_CACHE[n] = np.polynomial.laguerre.laggauss(n)
    return _LAGUERRE_CACHE[n]


def _composite_pdf_tail(h: float, turb: TurbulenceParams, point: PointingParams) -> float:
    """f_h(h) = xi2 h^{xi2-1}/A0^{xi2} * int_{h/A0}^inf f_GG(x) x^{-xi2} dx.

    In u = 2 sqrt(a b x) the integrand is a smooth algebraic factor times
    e^{-u}, so a shifted Gauss-Laguerre rule nails it with a few dozen
    nodes; everything is assembled in log space.
    """
    a, b, xi2, A0 = turb.a, turb.b, point.xi2, point.A0
    lg_ab = specfun.log_gamma(a) + specfun.log_gamma(b)
    u0 = 2.0 * math.sqrt(a * b * h / A0)
    nodes, weights = _laggauss(60)
    lvals = []
    for t, wgt in zip(nodes, weights):
        u = u0 + t
        x = u * u / (4.0 * a * b)
        lf = (
            math.log(2.0)
            + 0.5 * (a + b) * math.log(a * b)
            - lg_ab
            + ((a + b) / 2.0 - 1.0 - xi2) * math.log(x)
            + math.log(u / (2.0 * a * b))
        )
        lvals.append(math.log(wgt) + lf + math.log(_bessel_k_scaled(a - b, u)))
    m = max(lvals)
    inner = math.fsum(math.exp(lv - m) for lv in lvals)
    lpdf = (
        math.log(xi2)
        + (xi2 - 1.0) * math.log(h)
        - xi2 * math.log(A0)
        + m
        + math.log(inner)
        - u0
    )
    return math.exp(lpdf) if lpdf > -745.0 else 0.0


def composite_pdf(
    h: float,
    turb: TurbulenceParams,
    point: PointingParams,
    accuracy: Accuracy = DEFAULT_ACCURACY,
) -> float:
    """Density of the turbulence-plus-misalignment irradiance h_a h_p at h.

    Equals xi2 / (h Gamma(a) Gamma(b)) G^{3,0}_{1,3}(a b h / A0 | xi2+1;
    xi2, a, b); integrates to one and has mean A0 xi2/(xi2+1).  Evaluated
    from the residue branches near the origin and from the equivalent
    Bessel-integral representation in the far tail, where the branches
    cancel beyond double precision.
    """
    if not h > 0.0:
        raise ValueError(f"composite_pdf requires h > 0, got {h}")
    a, b, xi2, A0 = turb.a, turb.b, point.xi2, point.A0
    w = a * b * h / A0
    if w > _W_SWITCH:
        return _composite_pdf_tail(h, turb, point)
    g = specfun.meijer_g_3013(xi2 + 1.0, (xi2, a, b), w, accuracy)
    val = xi2 / h * math.exp(-specfun.log_gamma(a) - specfun.log_gamma(b)) * g
    return max(0.0, val)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_irradiance(
    cfg: FsoLinkConfig,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
):
    """Draw h = h_l * h_a * h_p.

    h_a is the product of two independent unit-mean Gamma variates with
    shapes (a, b); h_p is A0 U^{1/xi2} (inverse-CDF of the misalignment
    law).  Vectorized; pass a fresh, seeded generator per thread.
    """
    a, b = cfg.turb.a, cfg.turb.b
    ha = rng.gamma(a, 1.0 / a, size) * rng.gamma(b, 1.0 / b, size)
    hp = cfg.point.A0 * rng.uniform(size=size) ** (1.0 / cfg.point.xi2)
    return cfg.path_loss * ha * hp


def sample_snr(
    cfg: FsoLinkConfig,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
):
    """Per-round SNR draws: mean_snr * (h / E[h])^r."""
    h = sample_irradiance(cfg, rng, size)
    return cfg.mean_snr * (h / cfg.mean_irradiance) ** cfg.r


# ---------------------------------------------------------------------------
# accumulated-SNR series
# ---------------------------------------------------------------------------

_DEFAULT_N_TERMS = 110
_ZETA_REF = 50.0


def single_round_series(
    cfg: FsoLinkConfig,
    accuracy: Accuracy = DEFAULT_ACCURACY,
    n_terms: int = _DEFAULT_N_TERMS,
) -> GenPowerSeries:
    """Power-series form of the one-round SNR density.

    The three pole families of the irradiance density become branches with
    base exponents xi2/r, a/r, b/r (each split into r unit-step
    subfamilies).  The misalignment family is a single term: its residue
    chain is annihilated by the reciprocal Gamma in the integrand.
    """
    n_terms = min(n_terms, accuracy.max_terms)
    terms = snr_series_branches(cfg.turb.a, cfg.turb.b, cfg.point.xi2, cfg.r, n_terms)
    terms, tail = truncate_series(terms, _ZETA_REF, accuracy.rel_tol)
    recipe = SeriesRecipe(
        a=cfg.turb.a, b=cfg.turb.b, xi2=cfg.point.xi2, r=cfg.r,
        rounds=1, n_terms=n_terms,
    )
    return GenPowerSeries(
        terms=terms,
        domain_scale=cfg.mean_snr,
        rounds=1,
        recipe=recipe,
        tail_bound=tail,
        zeta_ref=_ZETA_REF,
    )


def accumulate_rounds(
    series: GenPowerSeries,
    n1: int,
    accuracy: Accuracy = DEFAULT_ACCURACY,
) -> GenPowerSeries:
    """Density of the sum of n1 independent copies.

    Termwise Beta-kernel convolution; branch exponents add, coefficient
    arrays Cauchy-multiply, and coinciding exponent sums merge (which is
    where the multinomial round-assignment multiplicities come from).
    n1 = 1 returns the input unchanged.
    """
    if n1 < 1:
        raise ValueError(f"n1 must be >= 1, got {n1}")
    if n1 == 1:
        return series
    acc = series.terms
    for _ in range(n1 - 1):
        acc = convolve(acc, series.terms, max_len=accuracy.max_terms)
    acc, tail = truncate_series(acc, series.zeta_ref, accuracy.rel_tol)
    recipe = SeriesRecipe(
        a=series.recipe.a, b=series.recipe.b, xi2=series.recipe.xi2,
        r=series.recipe.r, rounds=series.rounds * n1,
        n_terms=series.recipe.n_terms, lead_only=series.recipe.lead_only,
    )
    return GenPowerSeries(
        terms=acc,
        domain_scale=series.domain_scale,
        rounds=series.rounds * n1,
        recipe=recipe,
        tail_bound=series.tail_bound * n1 + tail,
        zeta_ref=series.zeta_ref,
    )


def accumulated_cdf(
    series: GenPowerSeries,
    z: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """P(accumulated SNR <= z); nondecreasing, clamped to [0, 1]."""
    if z < 0.0:
        raise ValueError(f"accumulated_cdf requires z >= 0, got {z}")
    return series_cdf(series, z, accuracy)


def accumulated_pdf(
    series: GenPowerSeries,
    z: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """Density of the accumulated SNR at z."""
    return series_pdf(series, z, accuracy)


def leading_order_series(
    cfg: FsoLinkConfig,
    n1: int,
    accuracy: Accuracy = DEFAULT_ACCURACY,
) -> GenPowerSeries:
    """High-SNR skeleton: only the first coefficient of each pole family
    survives before convolution, which after n1 rounds keeps exactly the
    lowest-order term of every round-assignment branch."""
    base = single_round_series(cfg, accuracy)
    lead_terms = []
    for e, c in base.terms:
        nz = np.nonzero(c)[0]
        if len(nz) == 0:
            continue
        k = int(nz[0])
        arr = np.zeros(k + 1)
        arr[k] = c[k]
        lead_terms.append((e, arr))
    recipe = SeriesRecipe(
        a=cfg.turb.a, b=cfg.turb.b, xi2=cfg.point.xi2, r=cfg.r,
        rounds=1, n_terms=base.recipe.n_terms, lead_only=True,
    )
    lead = GenPowerSeries(
        terms=lead_terms,
        domain_scale=cfg.mean_snr,
        rounds=1,
        recipe=recipe,
        tail_bound=0.0,
        zeta_ref=base.zeta_ref,
    )
    return accumulate_rounds(lead, n1, accuracy)


# ---------------------------------------------------------------------------
# deterministic attenuation
# ---------------------------------------------------------------------------

def path_loss_beer_lambert(
    visibility_km: float,
    distance_km: float,
    wavelength_nm: float,
) -> float:
    """Beer-Lambert attenuation with the Kim size-distribution exponent.

    sigma = (3.91 / V) (lambda / 550 nm)^(-q) per km, with q picked by the
    visibility band; returns exp(-sigma * d).
    """
    if visibility_km <= 0.0 or distance_km <= 0.0 or wavelength_nm <= 0.0:
        raise ValueError("visibility, distance, and wavelength must be positive")
    v = visibility_km
    if v > 50.0:
        q = 1.6
    elif v > 6.0:
        q = 1.3
    elif v > 1.0:
        q = 0.16 * v + 0.34
    elif v > 0.5:
        q = v - 0.5
    else:
        q = 0.0
    sigma = 3.91 / v * (wavelength_nm / 550.0) ** (-q)
    return math.exp(-sigma * distance_km)

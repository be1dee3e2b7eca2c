"""Generalized power-series representation of accumulated-SNR densities.

A density on (0, inf) is held as a sum of power-series branches with real
base exponents and unit index steps:

    f(z) = sum_t sum_n c[t][n] * z^(e_t + n - 1) / scale^(e_t + n)

so the CDF integrates termwise to sum c * (z/scale)^alpha / alpha with
alpha = e_t + n.  Addition of independent variables maps onto a Beta-kernel
Cauchy product of branches:

    conv(z^(p-1), z^(q-1)) = B(p, q) z^(p+q-1)

which is what `convolve` implements (with the Gamma weights folded in as a
pre/post scaling around an ordinary polynomial product).

Evaluation tracks inter-branch cancellation.  Far in the upper tail the
branches individually dwarf their sum; when double precision cannot reach
the requested tolerance the evaluator rebuilds the coefficients at extended
precision (mpmath) from the stored construction recipe.  That path is
deterministic, so evaluation stays pure: same inputs, same bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .specfun import Accuracy, g3013_residue_branches

_LOG_TINY = -745.0
_EPS = 2.2e-16

# Evaluation tolerance: 1e-9 keeps the fast float64 path active across the
# practical domain (oracle comparisons run at 1e-7); callers can tighten it
# and the extended-precision fallback will absorb the cost.
EVAL_ACCURACY = Accuracy(rel_tol=1e-9, max_terms=10000)


@dataclass(frozen=True)
class SeriesRecipe:
    """Construction parameters needed to rebuild branches at any precision."""

    a: float
    b: float
    xi2: float
    r: int
    rounds: int
    n_terms: int
    lead_only: bool = False


@dataclass
class GenPowerSeries:
    """Sum-of-power-series density with real exponents.

    ``terms`` is a list of (base_exponent, coefficient_array) pairs;
    ``domain_scale`` carries the mean-SNR normalization.  ``tail_bound``
    records the estimated CDF mass carried by truncated coefficients at
    ``zeta_ref`` (z = zeta_ref * domain_scale).
    """

    terms: list[tuple[float, np.ndarray]]
    domain_scale: float
    rounds: int
    recipe: SeriesRecipe
    tail_bound: float = 0.0
    zeta_ref: float = 1.0
    _mp_terms: list | None = field(default=None, repr=False)

    @property
    def min_exponent(self) -> float:
        return min(e for e, _ in self.terms)

    def with_scale(self, domain_scale: float) -> "GenPowerSeries":
        """Same distribution shape at a different mean SNR."""
        return GenPowerSeries(
            terms=self.terms,
            domain_scale=domain_scale,
            rounds=self.rounds,
            recipe=self.recipe,
            tail_bound=self.tail_bound,
            zeta_ref=self.zeta_ref,
            _mp_terms=self._mp_terms,
        )


def snr_series_branches(
    a: float, b: float, xi2: float, r: int, n_terms: int
) -> list[tuple[float, np.ndarray]]:
    """Single-round branches of the normalized-SNR density.

    Starting from the irradiance density expanded about the origin (three
    pole families at xi2, a, b), the SNR map gamma = scale * (h/E[h])^r
    turns exponent (d_j + k) into (d_j + k)/r.  Each family is split into r
    subfamilies so that coefficient indices advance the exponent by exactly
    one.
    """
    w = a * b * xi2 / (xi2 + 1.0)  # = a b E[h] / A0, scale-free
    lpref = (
        math.log(xi2)
        - math.lgamma(a)
        - math.lgamma(b)
        - math.log(float(r))
    )
    lw = math.log(w)
    out: list[tuple[float, np.ndarray]] = []
    for dj, gk in g3013_residue_branches(xi2 + 1.0, (xi2, a, b), n_terms):
        ck = np.zeros(n_terms)
        for k, g in enumerate(gk):
            if g == 0.0:
                continue
            lv = math.log(abs(g)) + (dj + k) * lw + lpref
            ck[k] = math.copysign(math.exp(lv), g) if lv > _LOG_TINY else 0.0
        for rho in range(r):
            sub = ck[rho::r]
            if np.any(sub != 0.0):
                out.append(((dj + rho) / r, sub.copy()))
    return out


def _scaled_log(arr: np.ndarray, lg: np.ndarray) -> tuple[np.ndarray, float]:
    """arr * exp(lg) as (mantissa_array, common_log_offset)."""
    with np.errstate(divide="ignore"):
        la = np.where(arr == 0.0, -np.inf, np.log(np.abs(arr)) + lg)
    m = float(np.max(la))
    if not np.isfinite(m):
        return np.zeros_like(arr), 0.0
    return np.sign(arr) * np.exp(la - m), m


def convolve(
    t1: list[tuple[float, np.ndarray]],
    t2: list[tuple[float, np.ndarray]],
    max_len: int | None = None,
) -> list[tuple[float, np.ndarray]]:
    """Beta-kernel convolution of two branch lists.

    B(p, q) = Gamma(p) Gamma(q) / Gamma(p+q) is separable, so each branch
    pair reduces to one np.convolve between Gamma-prescaled coefficient
    arrays followed by a Gamma postscale.  Branches landing on the same
    base exponent merge by addition (this is what generates the multinomial
    multiplicities across round assignments).
    """
    out: dict[float, tuple[float, np.ndarray]] = {}
    for e1, c1 in t1:
        i1 = np.arange(len(c1))
        a1s, off1 = _scaled_log(c1, gammaln(e1 + i1))
        for e2, c2 in t2:
            i2 = np.arange(len(c2))
            a2s, off2 = _scaled_log(c2, gammaln(e2 + i2))
            e = e1 + e2
            x = np.convolve(a1s, a2s)
            if max_len is not None and len(x) > max_len:
                x = x[:max_len]
            k = np.arange(len(x))
            with np.errstate(divide="ignore"):
                lx = np.where(
                    x == 0.0,
                    -np.inf,
                    np.log(np.abs(x)) + off1 + off2 - gammaln(e + k),
                )
            c = np.where(lx > _LOG_TINY, np.sign(x) * np.exp(lx), 0.0)
            key = round(e, 9)
            if key in out:
                eo, co = out[key]
                n = max(len(co), len(c))
                merged = np.zeros(n)
                merged[: len(co)] += co
                merged[: len(c)] += c
                out[key] = (eo, merged)
            else:
                out[key] = (e, c)
    return [out[k] for k in sorted(out)]


def _eval_terms_f64(
    terms: list[tuple[float, np.ndarray]],
    log_zeta: float,
    alpha_shift: float,
    divide_alpha: bool,
) -> tuple[float, float]:
    """sum c * zeta^(alpha - alpha_shift) [/ alpha], with cancellation peak.

    alpha_shift=1, divide_alpha=False gives the pdf kernel (in zeta units);
    alpha_shift=0, divide_alpha=True gives the CDF kernel.
    """
    total = 0.0
    peak = 0.0
    for e, c in terms:
        alpha = e + np.arange(len(c))
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.where(
                c == 0.0,
                -np.inf,
                np.log(np.abs(c)) + (alpha - alpha_shift) * log_zeta,
            )
            if divide_alpha:
                lt -= np.log(alpha)
        vals = np.sign(c) * np.exp(np.minimum(lt, 700.0))
        s = float(vals.sum())
        total += s
        p = float(np.max(np.abs(vals))) if len(vals) else 0.0
        peak = max(peak, p, abs(s))
    return total, peak


# ---------------------------------------------------------------------------
# extended-precision rebuild (deterministic fallback for deep cancellation)
# ---------------------------------------------------------------------------

def _mp_build(recipe: SeriesRecipe, dps: int):
    import mpmath as mp

    with mp.workdps(dps):
        a, b, xi2 = mp.mpf(recipe.a), mp.mpf(recipe.b), mp.mpf(recipe.xi2)
        r = recipe.r
        w = a * b * xi2 / (xi2 + 1)
        pref = xi2 / (mp.gamma(a) * mp.gamma(b)) / r
        ds = [xi2, a, b]
        c1 = xi2 + 1
        single = []
        n_terms = recipe.n_terms
        for j in range(3):
            dj = ds[j]
            others = [ds[i] for i in range(3) if i != j]
            ck = []
            for k in range(n_terms):
                if recipe.lead_only and k > 0:
                    ck.append(mp.mpf(0))
                    continue
                arg = c1 - dj - k
                if arg <= 0 and abs(arg - mp.nint(arg)) < mp.mpf("1e-12"):
                    ck.append(mp.mpf(0))
                    continue
                num = mp.mpf(1)
                for di in others:
                    num *= mp.gamma(di - dj - k)
                g = (-1) ** k / mp.factorial(k) * num / mp.gamma(arg)
                ck.append(pref * g * w ** (dj + k))
            for rho in range(r):
                sub = ck[rho::r]
                if any(v != 0 for v in sub):
                    single.append(((dj + mp.mpf(rho)) / r, sub))

        def mp_conv(t1, t2):
            out = {}
            for e1, c1_ in t1:
                for e2, c2_ in t2:
                    e = e1 + e2
                    key = round(float(e), 9)
                    if key not in out:
                        out[key] = (e, [mp.mpf(0)] * (len(c1_) + len(c2_) - 1))
                    acc = out[key][1]
                    for i, ai in enumerate(c1_):
                        if ai == 0:
                            continue
                        for j, bj in enumerate(c2_):
                            if bj == 0:
                                continue
                            acc[i + j] += ai * bj * mp.beta(e1 + i, e2 + j)
            return [out[k] for k in sorted(out)]

        acc = single
        for _ in range(recipe.rounds - 1):
            acc = mp_conv(acc, single)
        return acc


def _mp_eval(
    series: GenPowerSeries, zeta: float, dps: int, cdf: bool
) -> tuple[float, float]:
    """Evaluate at dps digits; returns (value, cancellation_peak)."""
    import mpmath as mp

    if series._mp_terms is None:
        series._mp_terms = _mp_build(series.recipe, max(dps, 40))
    with mp.workdps(dps):
        z = mp.mpf(zeta)
        total = mp.mpf(0)
        peak = mp.mpf(0)
        for e, c in series._mp_terms:
            s = mp.mpf(0)
            for n, cn in enumerate(c):
                if cn == 0:
                    continue
                alpha = e + n
                t = cn * z ** (alpha if cdf else alpha - 1)
                if cdf:
                    t /= alpha
                s += t
                peak = max(peak, abs(t))
            total += s
            peak = max(peak, abs(s))
        return float(total), float(peak)


def _eval_with_fallback(
    series: GenPowerSeries, zeta: float, cdf: bool, rel_tol: float
) -> float:
    val, peak = _eval_terms_f64(series.terms, math.log(zeta), 0.0 if cdf else 1.0, cdf)
    if peak * _EPS <= rel_tol * max(abs(val), 1e-300):
        return val
    # Double precision lost the cancellation battle.  Rebuild at extended
    # precision, raising dps until the mp evaluation certifies itself.
    tol_digits = max(1, int(-math.log10(rel_tol)) + 2)
    dps = int(math.log10(max(peak / max(abs(val), peak * _EPS), 1.0))) + tol_digits + 8
    for _ in range(6):
        val, peak = _mp_eval(series, zeta, dps, cdf)
        cancel = peak / max(abs(val), 5e-324)
        if cancel * 10.0 ** (-dps) <= rel_tol:
            return val
        dps = int(math.log10(cancel)) + tol_digits + 8
    raise ArithmeticError(
        f"series evaluation at zeta={zeta} did not stabilize at {dps} digits"
    )


def series_cdf(
    series: GenPowerSeries,
    z: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """CDF at z: termwise-integrated series, clamped to [0, 1]."""
    if z <= 0.0:
        return 0.0
    zeta = z / series.domain_scale
    val = _eval_with_fallback(series, zeta, True, accuracy.rel_tol)
    return min(1.0, max(0.0, val))


def series_pdf(
    series: GenPowerSeries,
    z: float,
    accuracy: Accuracy = EVAL_ACCURACY,
) -> float:
    """Density at z > 0 (nonnegative by clamping of negative round-off)."""
    if z <= 0.0:
        return 0.0
    zeta = z / series.domain_scale
    val = _eval_with_fallback(series, zeta, False, accuracy.rel_tol)
    return max(0.0, val) / series.domain_scale


def truncate_series(
    terms: list[tuple[float, np.ndarray]],
    zeta_ref: float,
    rel_tol: float,
) -> tuple[list[tuple[float, np.ndarray]], float]:
    """Drop trailing coefficients whose CDF contribution at zeta_ref stays
    below rel_tol of the running branch scale for five consecutive terms.

    Returns the trimmed branches and a geometric estimate of the discarded
    tail mass at zeta_ref.
    """
    lz = math.log(zeta_ref)
    trimmed: list[tuple[float, np.ndarray]] = []
    tail = 0.0
    for e, c in terms:
        alpha = e + np.arange(len(c))
        with np.errstate(divide="ignore"):
            lt = np.where(
                c == 0.0, -np.inf, np.log(np.abs(c)) + alpha * lz - np.log(alpha)
            )
        mags = np.exp(np.minimum(lt, 700.0))
        scale = float(np.max(mags))
        keep = len(c)
        quiet = 0
        for n in range(len(c)):
            if mags[n] <= rel_tol * scale:
                quiet += 1
                if quiet >= 5:
                    keep = n + 1
                    break
            else:
                quiet = 0
        if keep < len(c):
            last = mags[keep - 1]
            ratio = mags[keep - 1] / mags[keep - 2] if keep >= 2 and mags[keep - 2] > 0 else 0.5
            ratio = min(ratio, 0.9)
            tail += last * ratio / (1.0 - ratio)
        trimmed.append((e, c[:keep].copy()))
    return trimmed, tail

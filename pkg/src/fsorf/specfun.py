"""Self-contained special-function kernel.

Everything here is pure and reentrant: no caches, no global state, and the
same inputs always produce bit-identical outputs.  The rest of the library
builds its analytical evaluators on these routines; scipy/mpmath appear only
in the test oracles, never here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "Accuracy",
    "ConvergenceError",
    "DegenerateParameterWarning",
    "log_gamma",
    "signed_log_gamma",
    "reg_lower_gamma",
    "log_reg_lower_gamma",
    "beta",
    "hyp2f2",
    "bessel_i",
    "gaussian_q",
    "meijer_g_3013",
    "g3013_residue_branches",
]


@dataclass(frozen=True)
class Accuracy:
    """Series truncation policy: relative tolerance and term cap."""

    rel_tol: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_ACCURACY = Accuracy()


class ConvergenceError(ArithmeticError):
    """A series hit its term cap before reaching tolerance.

    ``partial`` holds the best value accumulated so far.
    """

    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


class DegenerateParameterWarning(UserWarning):
    """Pole-family exponents nearly coincide and were perturbed apart."""


# Lanczos approximation, g=7, 9 terms: ~1e-15 relative on the shifted range.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LN_SQRT_2PI = 0.91893853320467274178


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    # Recurrence keeps the Lanczos core on x >= 1 where it is most accurate.
    shift = 0.0
    while x < 1.0:
        shift -= math.log(x)
        x += 1.0
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return shift + _LN_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def signed_log_gamma(x: float) -> tuple[float, float]:
    """(log |Gamma(x)|, sign of Gamma(x)) for any non-pole real x."""
    if x > 0.0:
        return log_gamma(x), 1.0
    if x == math.floor(x):
        raise ValueError(f"Gamma pole at x = {x}")
    # Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    s = math.sin(math.pi * x)
    val = math.log(math.pi / abs(s)) - log_gamma(1.0 - x)
    return val, 1.0 if s > 0.0 else -1.0


def beta(p: float, q: float) -> float:
    """Euler Beta function for p, q > 0."""
    if not (p > 0.0 and q > 0.0):
        raise ValueError(f"beta requires positive arguments, got ({p}, {q})")
    return math.exp(log_gamma(p) + log_gamma(q) - log_gamma(p + q))


def _gamma_p_series(s: float, x: float) -> float:
    """log of P(s,x) via the ascending series; valid for x < s + 1."""
    term = 1.0 / s
    total = term
    k = 0
    while True:
        k += 1
        term *= x / (s + k)
        total += term
        if abs(term) < abs(total) * 1e-17 or k > 10000:
            break
    return -x + s * math.log(x) - log_gamma(s) + math.log(total)


def _gamma_q_contfrac(s: float, x: float) -> float:
    """log of Q(s,x) = 1 - P(s,x) via Lentz continued fraction; x >= s + 1."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -x + s * math.log(x) - log_gamma(s) + math.log(h)


def reg_lower_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete Gamma P(s, x), clamped to [0, 1]."""
    if not s > 0.0:
        raise ValueError(f"reg_lower_gamma requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"reg_lower_gamma requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        lp = _gamma_p_series(s, x)
        return min(1.0, math.exp(lp)) if lp < 0.0 else 1.0
    lq = _gamma_q_contfrac(s, x)
    q = math.exp(lq) if lq < 0.0 else 1.0
    return min(1.0, max(0.0, 1.0 - q))


def log_reg_lower_gamma(s: float, x: float) -> float:
    """log P(s, x); stays finite far below the double underflow threshold."""
    if not s > 0.0:
        raise ValueError(f"log_reg_lower_gamma requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"log_reg_lower_gamma requires x >= 0, got {x}")
    if x == 0.0:
        return -math.inf
    if x < s + 1.0:
        return min(0.0, _gamma_p_series(s, x))
    q = math.exp(_gamma_q_contfrac(s, x))
    return math.log1p(-min(q, 1.0 - 1e-300))


def hyp2f2(
    a1: float,
    a2: float,
    b1: float,
    b2: float,
    z: float,
    accuracy: Accuracy = DEFAULT_ACCURACY,
) -> float:
    """Generalized hypergeometric 2F2(a1, a2; b1, b2; z).

    Term recurrence with running Pochhammer ratios; the series converges for
    every finite z.  Raises ConvergenceError (carrying the partial sum) if
    the term cap is reached first.
    """
    for bname, bval in (("b1", b1), ("b2", b2)):
        if bval <= 0.0 and bval == math.floor(bval):
            raise ValueError(f"{bname} must not be a nonpositive integer, got {bval}")
    if z == 0.0:
        return 1.0
    term = 1.0
    total = 1.0
    peak = 1.0
    quiet = 0
    for n in range(accuracy.max_terms):
        term *= (a1 + n) * (a2 + n) / ((b1 + n) * (b2 + n)) * z / (n + 1.0)
        total += term
        peak = max(peak, abs(term))
        if abs(term) <= accuracy.rel_tol * abs(total):
            quiet += 1
            if quiet >= 3:
                if peak * 2.2e-16 > max(accuracy.rel_tol, 1e-8) * abs(total):
                    raise ConvergenceError(
                        f"2F2 terms cancel by {peak / abs(total):.2e} at z={z}; "
                        "double precision cannot certify the sum",
                        partial=total,
                    )
                return total
        else:
            quiet = 0
    raise ConvergenceError(
        f"2F2 did not reach rel_tol={accuracy.rel_tol} in {accuracy.max_terms} terms",
        partial=total,
    )


def _bessel_i_series(order: float, x: float, scaled: bool) -> float:
    # ascending series; inline e^{-x} scaling keeps terms representable
    lt0 = order * math.log(x / 2.0) - log_gamma(order + 1.0)
    if scaled:
        lt0 -= x
    term = math.exp(lt0)
    total = term
    q = x * x / 4.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (order + k))
        total += term
        if term < total * 1e-17 or k > 20000:
            return total


def _bessel_i_asymptotic_scaled(order: float, x: float) -> float:
    # Hankel expansion of e^{-x} I_nu(x); truncated at the smallest term
    mu = 4.0 * order * order
    pref = 1.0 / math.sqrt(2.0 * math.pi * x)
    term = 1.0
    total = 1.0
    best = abs(term)
    for k in range(1, 30):
        term *= -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * x * k)
        if abs(term) >= best:
            break
        best = abs(term)
        total += term
    return pref * total


def bessel_i(order: float, x: float, scaled: bool = False) -> float:
    """Modified Bessel function of the first kind I_nu(x), nu >= 0, x >= 0.

    ``scaled=True`` returns e^{-x} I_nu(x); callers must use it when x is
    large enough for the plain value to overflow.
    """
    if order < 0.0:
        raise ValueError(f"bessel_i requires order >= 0, got {order}")
    if x < 0.0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if order == 0.0 else 0.0
    if x > 600.0:
        val = _bessel_i_asymptotic_scaled(order, x)
        if scaled:
            return val
        if x > 700.0:
            raise OverflowError(
                f"I_{order}({x}) overflows double precision; use scaled=True"
            )
        return val * math.exp(x)
    return _bessel_i_series(order, x, scaled)


def gaussian_q(x: float) -> float:
    """Gaussian tail probability Q(x) = 0.5 erfc(x / sqrt(2))."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _separate_degenerate(values: list[float]) -> list[float]:
    """Nudge exponents whose pairwise spacing is an integer within 1e-9.

    The residue expansion assumes simple poles; near-integer spacing makes a
    numerator Gamma blow up against a vanishing pole term.  The smaller
    member of an offending pair is shifted by 1e-6 and a warning issued.
    """
    vals = list(values)
    for _ in range(8):
        clean = True
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                delta = vals[i] - vals[j]
                if abs(delta - round(delta)) < 1e-9:
                    k = i if vals[i] < vals[j] else j
                    warnings.warn(
                        f"pole exponents {vals[i]:.9g} and {vals[j]:.9g} are "
                        "integer-spaced; perturbing the smaller by 1e-6",
                        DegenerateParameterWarning,
                        stacklevel=3,
                    )
                    vals[k] -= 1e-6
                    clean = False
        if clean:
            return vals
    raise ValueError(f"could not separate degenerate exponents {values}")


def g3013_residue_branches(
    a1: float,
    bs: tuple[float, float, float],
    n_terms: int,
) -> list[tuple[float, list[float]]]:
    """Residue power-series branches of G^{3,0}_{1,3}(z | a1; b1,b2,b3).

    Returns one (exponent, coefficients) pair per pole family:
    G(z) = sum_j z^{b_j} sum_k coeff[j][k] z^k, valid for all z > 0 when the
    b_j are separated modulo integers (enforced by perturbation).  Terms
    where the denominator Gamma sits on a pole are exactly zero.
    """
    b1, b2, b3 = _separate_degenerate(list(bs))
    out = []
    for dj, others in ((b1, (b2, b3)), (b2, (b1, b3)), (b3, (b1, b2))):
        coeffs = []
        for k in range(n_terms):
            lg = -log_gamma(k + 1.0)
            sg = -1.0 if k % 2 else 1.0
            for di in others:
                lv, sv = signed_log_gamma(di - dj - k)
                lg += lv
                sg *= sv
            arg = a1 - dj - k
            if arg <= 0.0 and abs(arg - round(arg)) < 1e-12:
                coeffs.append(0.0)  # 1/Gamma at a pole
                continue
            lv, sv = signed_log_gamma(arg)
            lg -= lv
            sg *= sv
            coeffs.append(sg * math.exp(lg) if lg > -745.0 else 0.0)
        out.append((dj, coeffs))
    return out


def meijer_g_3013(
    a1: float,
    bs: tuple[float, float, float],
    z: float,
    accuracy: Accuracy = DEFAULT_ACCURACY,
) -> float:
    """Meijer G^{3,0}_{1,3}(z | a1; b1, b2, b3) for z > 0.

    Evaluated as the sum of the three residue power series.  The result is
    finite and real.  The branches cancel against each other as z grows
    (the function decays like exp(-2 sqrt(z)) while each branch grows), so
    the achievable precision degrades with z regardless of rel_tol; a
    ConvergenceError is raised once double precision cannot deliver even
    max(rel_tol, 1e-6) relative accuracy.
    """
    if not z > 0.0:
        raise ValueError(f"meijer_g_3013 requires z > 0, got {z}")
    lnz = math.log(z)
    # generous term budget: the branch series decay like a 1F2 once k^2 > z
    n_terms = min(accuracy.max_terms, max(60, int(4.0 * math.sqrt(z)) + 40))
    total = 0.0
    peak = 0.0
    for dj, coeffs in g3013_residue_branches(a1, bs, n_terms):
        s = 0.0
        for k, c in enumerate(coeffs):
            if c == 0.0:
                continue
            le = (dj + k) * lnz
            t = c * math.exp(le) if abs(le) < 700.0 else math.copysign(
                math.exp(min(math.log(abs(c)) + le, 700.0)), c
            )
            s += t
            peak = max(peak, abs(t))
        total += s
        peak = max(peak, abs(s))
    err_ceiling = max(accuracy.rel_tol, 1e-6)
    if abs(total) == 0.0 or peak / abs(total) > err_ceiling / 2.2e-16:
        raise ConvergenceError(
            f"residue branches cancel by {peak / max(abs(total), 5e-324):.2e} "
            f"at z={z}; double precision cannot deliver {err_ceiling:.0e} "
            "relative accuracy",
            partial=total,
        )
    return total

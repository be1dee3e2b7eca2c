"""Coupled link simulator: the sampling oracle behind every closed form.

Samples are organized in fixed-size blocks, each driven by its own
counter-based Philox stream keyed by (seed, block index).  The sample set
is therefore a pure function of (seed, n_samples): splitting the blocks
across workers reorders nothing and changes nothing.  Bernoulli counts
aggregate exactly in integers; moment accumulators combine block sums with
compensated summation so partition invariance holds to ~1e-12 even in
floating point.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .e2e_analysis import HarqConfig, PerConfig, waterfall_threshold
from .fso_link import FsoLinkConfig, sample_snr
from .irs_rf_link import IrsParams, RfLinkConfig, fit_nakagami, sample_cascade_power, sample_rf_snr

__all__ = [
    "McEstimate",
    "MomentEstimate",
    "simulate_outage",
    "simulate_per",
    "estimate_moments",
]

BLOCK_SIZE = 1 << 18


@dataclass(frozen=True)
class McEstimate:
    """Bernoulli frequency estimate with its binomial standard error."""

    value: float
    std_err: float
    n_samples: int
    seed: int

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - reference) <= n_sigma * max(self.std_err, 5e-324)


@dataclass(frozen=True)
class MomentEstimate:
    """Second and fourth moments of the cascade power with standard errors."""

    power2: float
    power2_std_err: float
    power4: float
    power4_std_err: float
    n_samples: int
    seed: int


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))


def _blocks(n_samples: int) -> list[tuple[int, int]]:
    out = []
    start = 0
    idx = 0
    while start < n_samples:
        out.append((idx, min(BLOCK_SIZE, n_samples - start)))
        start += BLOCK_SIZE
        idx += 1
    return out


def _workers(explicit: int | None) -> int:
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get("FSORF_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def _run_blocks(fn, n_samples: int, workers: int | None):
    """Map fn(block_idx, block_len) over all blocks, in index order."""
    blocks = _blocks(n_samples)
    w = _workers(workers)
    if w == 1 or len(blocks) == 1:
        return [fn(i, n) for i, n in blocks]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda t: fn(*t), blocks))


def _accumulated_snrs(
    fso_cfg: FsoLinkConfig,
    rf_cfg: RfLinkConfig,
    rng: np.random.Generator,
    n: int,
    rf_exact: bool,
    fit,
):
    z_sr = np.zeros(n)
    for _ in range(fso_cfg.rounds_n1):
        z_sr += sample_snr(fso_cfg, rng, n)
    z_rd = np.zeros(n)
    for _ in range(rf_cfg.rounds_n2):
        z_rd += sample_rf_snr(rf_cfg, rng, n, fit=fit, surrogate=not rf_exact)
    return z_sr, z_rd


def simulate_outage(
    fso_cfg: FsoLinkConfig,
    rf_cfg: RfLinkConfig,
    harq: HarqConfig,
    n_samples: int,
    seed: int,
    rf_exact: bool = True,
    workers: int | None = None,
) -> McEstimate:
    """Empirical P(min of the accumulated hop SNRs < 2^R - 1).

    ``rf_exact`` draws the full reflector cascade; False uses the fitted
    Gamma surrogate (much faster, and the difference between the two
    quantifies the surrogate quality).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if fso_cfg.rounds_n1 != harq.rounds_n1 or rf_cfg.rounds_n2 != harq.rounds_n2:
        raise ValueError("round budgets disagree between configs")
    gth = harq.snr_threshold
    fit = fit_nakagami(rf_cfg.irs)

    def block(idx: int, n: int) -> int:
        rng = _block_rng(seed, idx)
        z_sr, z_rd = _accumulated_snrs(fso_cfg, rf_cfg, rng, n, rf_exact, fit)
        return int(np.count_nonzero(np.minimum(z_sr, z_rd) < gth))

    hits = sum(_run_blocks(block, n_samples, workers))
    p = hits / n_samples
    return McEstimate(
        value=p,
        std_err=math.sqrt(p * (1.0 - p) / n_samples),
        n_samples=n_samples,
        seed=seed,
    )


def simulate_per(
    fso_cfg: FsoLinkConfig,
    rf_cfg: RfLinkConfig,
    per_cfg: PerConfig,
    n_samples: int,
    seed: int,
    rf_exact: bool = True,
    exact_error_curve: bool = False,
    workers: int | None = None,
) -> McEstimate:
    """Empirical packet error rate after all rounds.

    Default is the step model (error iff the combined accumulated SNR
    lands below the waterfall threshold); ``exact_error_curve`` instead
    evaluates the instantaneous error curve at the combined SNR and draws
    a Bernoulli, which is the un-approximated decoder model.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    t0 = waterfall_threshold(per_cfg)
    fit = fit_nakagami(rf_cfg.irs)
    L = per_cfg.packet_bits

    def block(idx: int, n: int) -> int:
        rng = _block_rng(seed, idx)
        z_sr, z_rd = _accumulated_snrs(fso_cfg, rf_cfg, rng, n, rf_exact, fit)
        z = np.minimum(z_sr, z_rd)
        if not exact_error_curve:
            return int(np.count_nonzero(z < t0))
        pb = 0.5 * erfc(np.sqrt(np.maximum(z, 0.0)))
        g = -np.expm1(L * np.log1p(-np.minimum(pb, 1.0 - 1e-17)))
        return int(np.count_nonzero(rng.uniform(size=n) < g))

    hits = sum(_run_blocks(block, n_samples, workers))
    p = hits / n_samples
    return McEstimate(
        value=p,
        std_err=math.sqrt(p * (1.0 - p) / n_samples),
        n_samples=n_samples,
        seed=seed,
    )


def estimate_moments(
    irs: IrsParams,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> MomentEstimate:
    """Sample moments of the cascade power w = |I|^2 (and w^2)."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")

    def block(idx: int, n: int):
        rng = _block_rng(seed, idx)
        w = sample_cascade_power(irs, rng, n)
        w2 = w * w
        return math.fsum(w), math.fsum(w2), math.fsum(w2 * w2)

    sums = _run_blocks(block, n_samples, workers)
    n = n_samples
    m2 = math.fsum(s[0] for s in sums) / n
    m4 = math.fsum(s[1] for s in sums) / n
    m8 = math.fsum(s[2] for s in sums) / n
    var2 = max(m4 - m2 * m2, 0.0)
    var4 = max(m8 - m4 * m4, 0.0)
    return MomentEstimate(
        power2=m2,
        power2_std_err=math.sqrt(var2 / n),
        power4=m4,
        power4_std_err=math.sqrt(var4 / n),
        n_samples=n,
        seed=seed,
    )

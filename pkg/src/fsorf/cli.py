"""Experiment runner: sweeps, figure presets, validation, CSV output.

Configuration is a flat key=value namespace with dotted sections
(``fso.a=2.064``); a config file provides the base layer and repeated
``--set key=value`` flags override it.  SNR values cross this boundary in
dB and are converted once, internally everything is linear.  Sweep points
are evaluated concurrently (worker count from FSORF_WORKERS) but always
written in sweep order, so output is deterministic.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .e2e_analysis import (
    HarqConfig,
    PerConfig,
    diversity_gain,
    outage_probability,
    per_closed_form,
    waterfall_threshold,
)
from .fso_link import (
    DetectionMode,
    FsoLinkConfig,
    PointingParams,
    TurbulenceParams,
    accumulate_rounds,
    single_round_series,
)
from .irs_rf_link import IrsParams, RfLinkConfig, fit_nakagami
from .montecarlo import estimate_moments, simulate_outage, simulate_per

__all__ = ["ExperimentConfig", "run_sweep", "figure_preset", "main"]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameter set for one sweep."""

    # optical hop
    fso_a: float = 2.064
    fso_b: float = 1.342
    fso_xi2: float = 1.44
    fso_a0: float = 1.0
    fso_detection: str = "imdd"
    fso_mean_snr_db: float = 40.0
    fso_rounds: int = 3
    fso_path_loss: float = 1.0
    # RF hop
    rf_reflectors: int = 128
    rf_kappa: float = 2.0
    rf_rician_k: float = 2.0
    rf_pathloss_exp: float = 2.6
    rf_d1_m: float = 10.0
    rf_d2_m: float = 10.0
    rf_mean_snr_db: float = 50.0
    rf_rounds: int = 2
    # protocol / packet
    harq_rate: float = 1.0
    per_packet_bits: int = 1024
    per_enabled: bool = False
    # sweep
    sweep_variable: str = "fso.mean_snr_db"
    sweep_start: float = 20.0
    sweep_stop: float = 60.0
    sweep_points: int = 9
    sweep_scale: str = "linear"
    # execution
    mode: str = "analytic"
    mc_samples: int = 1_000_000
    mc_seed: int = 20260810
    mc_rf_exact: bool = False
    output: str = "-"

    def __post_init__(self):
        if self.sweep_points < 2:
            raise ConfigError(f"sweep.points must be >= 2, got {self.sweep_points}")
        if self.sweep_scale not in ("linear", "log"):
            raise ConfigError(f"sweep.scale must be linear|log, got {self.sweep_scale}")
        if self.mode not in ("analytic", "mc", "both"):
            raise ConfigError(f"mode must be analytic|mc|both, got {self.mode}")
        if self.sweep_variable not in _SWEEPABLE:
            raise ConfigError(
                f"sweep.variable must be one of {sorted(_SWEEPABLE)}, "
                f"got {self.sweep_variable}"
            )
        # build once to surface field errors early, with the field named
        try:
            self.fso_config()
            self.rf_config()
            self.harq_config()
            self.per_config()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def fso_config(self) -> FsoLinkConfig:
        return FsoLinkConfig(
            turb=TurbulenceParams(self.fso_a, self.fso_b),
            point=PointingParams(self.fso_xi2, self.fso_a0),
            detection=DetectionMode.parse(self.fso_detection),
            mean_snr_db=self.fso_mean_snr_db,
            rounds_n1=self.fso_rounds,
            path_loss=self.fso_path_loss,
        )

    def rf_config(self) -> RfLinkConfig:
        irs = IrsParams(
            m_reflectors=self.rf_reflectors,
            kappa=self.rf_kappa,
            rician_k=self.rf_rician_k,
            pathloss_exp=self.rf_pathloss_exp,
            d1_m=self.rf_d1_m,
            d2_m=self.rf_d2_m,
        )
        return RfLinkConfig.from_mean_snr_db(
            irs, self.rf_mean_snr_db, self.rf_rounds
        )

    def harq_config(self) -> HarqConfig:
        return HarqConfig(
            rounds_n1=self.fso_rounds,
            rounds_n2=self.rf_rounds,
            rate_bpshz=self.harq_rate,
        )

    def per_config(self) -> PerConfig:
        return PerConfig(packet_bits=self.per_packet_bits)


# key=value namespace <-> dataclass fields
_KEYMAP = {
    "fso.a": ("fso_a", float),
    "fso.b": ("fso_b", float),
    "fso.xi2": ("fso_xi2", float),
    "fso.a0": ("fso_a0", float),
    "fso.detection": ("fso_detection", str),
    "fso.mean_snr_db": ("fso_mean_snr_db", float),
    "fso.rounds": ("fso_rounds", int),
    "fso.path_loss": ("fso_path_loss", float),
    "rf.reflectors": ("rf_reflectors", int),
    "rf.kappa": ("rf_kappa", float),
    "rf.rician_k": ("rf_rician_k", float),
    "rf.pathloss_exp": ("rf_pathloss_exp", float),
    "rf.d1_m": ("rf_d1_m", float),
    "rf.d2_m": ("rf_d2_m", float),
    "rf.mean_snr_db": ("rf_mean_snr_db", float),
    "rf.rounds": ("rf_rounds", int),
    "harq.rate": ("harq_rate", float),
    "per.packet_bits": ("per_packet_bits", int),
    "per.enabled": ("per_enabled", lambda s: s.lower() in ("1", "true", "yes")),
    "sweep.variable": ("sweep_variable", str),
    "sweep.start": ("sweep_start", float),
    "sweep.stop": ("sweep_stop", float),
    "sweep.points": ("sweep_points", int),
    "sweep.scale": ("sweep_scale", str),
    "mode": ("mode", str),
    "mc.samples": ("mc_samples", int),
    "mc.seed": ("mc_seed", int),
    "mc.rf_exact": ("mc_rf_exact", lambda s: s.lower() in ("1", "true", "yes")),
    "output": ("output", str),
}

_SWEEPABLE = {
    "fso.mean_snr_db",
    "rf.mean_snr_db",
    "rf.reflectors",
    "rf.kappa",
    "per.packet_bits",
}

_INT_SWEEP = {"rf.reflectors", "per.packet_bits"}


def parse_assignments(pairs: list[str], base: ExperimentConfig) -> ExperimentConfig:
    updates = {}
    for raw in pairs:
        if "=" not in raw:
            raise ConfigError(f"expected key=value, got {raw!r}")
        key, _, val = raw.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEYMAP:
            raise ConfigError(f"unknown configuration key {key!r}")
        attr, conv = _KEYMAP[key]
        try:
            updates[attr] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return replace(base, **updates)


def load_config_file(path: str, base: ExperimentConfig) -> ExperimentConfig:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {text!r}")
            pairs.append(text)
    return parse_assignments(pairs, base)


# ---------------------------------------------------------------------------
# sweep evaluation
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    sweep_value: float
    op: float = math.nan
    p_out_sr: float = math.nan
    p_out_rd: float = math.nan
    diversity: float = math.nan
    per: float = math.nan
    f_sr_t0: float = math.nan
    f_rd_t0: float = math.nan
    t0: float = math.nan
    op_mc: float = math.nan
    op_mc_stderr: float = math.nan
    per_mc: float = math.nan
    per_mc_stderr: float = math.nan


CSV_COLUMNS = [f.name for f in dataclasses.fields(SweepRow)]


def sweep_values(cfg: ExperimentConfig) -> list[float]:
    if cfg.sweep_scale == "log":
        if cfg.sweep_start <= 0 or cfg.sweep_stop <= 0:
            raise ConfigError("sweep.start/stop must be positive for log scale")
        vals = np.geomspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)
    else:
        vals = np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)
    if cfg.sweep_variable in _INT_SWEEP:
        ints = sorted({int(round(v)) for v in vals})
        return [float(v) for v in ints]
    return [float(v) for v in vals]


def _with_sweep_value(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    attr, conv = _KEYMAP[cfg.sweep_variable]
    cast = int(round(value)) if cfg.sweep_variable in _INT_SWEEP else value
    return replace(cfg, **{attr: cast})


def evaluate_point(cfg: ExperimentConfig, value: float) -> SweepRow:
    """One sweep point: analytic figures and/or the sampling estimates."""
    pt = _with_sweep_value(cfg, value)
    fso = pt.fso_config()
    rf = pt.rf_config()
    harq = pt.harq_config()
    row = SweepRow(sweep_value=value)
    if pt.mode in ("analytic", "both"):
        series = accumulate_rounds(single_round_series(fso), fso.rounds_n1)
        res = outage_probability(series, rf, harq)
        row.op = res.op
        row.p_out_sr = res.p_out_sr
        row.p_out_rd = res.p_out_rd
        row.diversity = res.diversity
        if pt.per_enabled:
            pb = per_closed_form(series, rf, pt.per_config())
            row.per = pb.value
            row.f_sr_t0 = pb.f_sr_t0
            row.f_rd_t0 = pb.f_rd_t0
            row.t0 = pb.t0
        else:
            row.diversity = diversity_gain(fso, harq)
    if pt.mode in ("mc", "both"):
        est = simulate_outage(
            fso, rf, harq, pt.mc_samples, pt.mc_seed, rf_exact=pt.mc_rf_exact
        )
        row.op_mc = est.value
        row.op_mc_stderr = est.std_err
        if pt.per_enabled:
            pest = simulate_per(
                fso, rf, pt.per_config(), pt.mc_samples, pt.mc_seed,
                rf_exact=pt.mc_rf_exact,
            )
            row.per_mc = pest.value
            row.per_mc_stderr = pest.std_err
    return row


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[SweepRow]:
    values = sweep_values(cfg)
    if workers is None:
        env = os.environ.get("FSORF_WORKERS", "")
        workers = max(1, int(env)) if env.strip() else 1
    if workers == 1:
        return [evaluate_point(cfg, v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda v: evaluate_point(cfg, v), values))


def _version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"fsorf-{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"fsorf-{__version__}"


def write_csv(
    rows: list[SweepRow],
    cfg: ExperimentConfig,
    stream,
    curve_labels: list[str] | None = None,
) -> None:
    """CSV with '#'-prefixed header lines embedding the resolved config."""
    stream.write(f"# {_version_string()}\n")
    for key in sorted(_KEYMAP):
        attr, _ = _KEYMAP[key]
        stream.write(f"# {key} = {getattr(cfg, attr)}\n")
    cols = (["curve"] if curve_labels else []) + CSV_COLUMNS
    stream.write(",".join(cols) + "\n")
    for i, row in enumerate(rows):
        cells = [] if curve_labels is None else [curve_labels[i]]
        for name in CSV_COLUMNS:
            cells.append(f"{getattr(row, name):.9e}")
        stream.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------

_AT_TRIPLES = {
    "strong": (2.064, 1.342),
    "moderate": (2.296, 1.822),
    "weak": (2.902, 2.51),
}


def figure_preset(figure_id: str) -> list[tuple[str, ExperimentConfig]]:
    """Named curve families reproducing the reference operating setups.

    Values not pinned by the shared defaults (R=1, A0=1, xi=1.2, M=128,
    nu=2.6, strong-turbulence shape pair) are chosen per figure and show
    up in the CSV header of each run.
    """
    base = ExperimentConfig()
    fid = figure_id.lower().lstrip("fig")
    if fid == "2":
        out = []
        for at, (a, b) in _AT_TRIPLES.items():
            for det in ("hd", "imdd"):
                out.append((
                    f"{at}-{det}",
                    replace(
                        base, fso_a=a, fso_b=b, fso_detection=det,
                        fso_rounds=3, rf_rounds=2, rf_mean_snr_db=50.0,
                        sweep_variable="fso.mean_snr_db",
                        sweep_start=20.0, sweep_stop=60.0, sweep_points=9,
                    ),
                ))
        return out
    if fid == "3":
        return [
            (
                f"n2={n2}",
                replace(
                    base, fso_detection="hd", fso_mean_snr_db=45.0,
                    fso_rounds=3, rf_rounds=n2, rf_mean_snr_db=25.0,
                    sweep_variable="rf.reflectors",
                    sweep_start=16.0, sweep_stop=256.0, sweep_points=9,
                    sweep_scale="log",
                ),
            )
            for n2 in (1, 2, 3)
        ]
    if fid == "4":
        return [
            (
                f"n1={n1},n2={n2}",
                replace(
                    base, fso_detection="hd", fso_mean_snr_db=45.0,
                    fso_rounds=n1, rf_rounds=n2, rf_mean_snr_db=40.0,
                    sweep_variable="rf.kappa",
                    sweep_start=0.5, sweep_stop=16.0, sweep_points=9,
                    sweep_scale="log",
                ),
            )
            for n1, n2 in ((1, 1), (2, 2), (3, 2))
        ]
    if fid == "5":
        return [
            (
                f"n1={n1},n2={n2}",
                replace(
                    base, fso_detection="imdd", fso_rounds=n1,
                    rf_rounds=n2, rf_mean_snr_db=45.0,
                    per_enabled=True, per_packet_bits=1024,
                    sweep_variable="fso.mean_snr_db",
                    sweep_start=20.0, sweep_stop=50.0, sweep_points=7,
                ),
            )
            for n1, n2 in ((1, 1), (2, 1), (2, 2), (3, 2))
        ]
    if fid == "6":
        return [
            (
                f"rd={rd}dB",
                replace(
                    base, fso_detection="imdd", fso_mean_snr_db=40.0,
                    fso_rounds=2, rf_rounds=2, rf_mean_snr_db=rd,
                    per_enabled=True,
                    sweep_variable="per.packet_bits",
                    sweep_start=64.0, sweep_stop=16384.0, sweep_points=9,
                    sweep_scale="log",
                ),
            )
            for rd in (35.0, 45.0)
        ]
    raise ConfigError(f"unknown figure id {figure_id!r} (expected 2..6)")


# ---------------------------------------------------------------------------
# validation suite
# ---------------------------------------------------------------------------

def run_validation(samples: int, seed: int, stream) -> bool:
    """Analytic-vs-sampling cross checks; prints one line per check."""
    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, detail: str):
        checks.append((name, bool(ok), detail))

    # waterfall threshold sanity
    t0_single = waterfall_threshold(PerConfig(packet_bits=1))
    add("t0-single-bit", abs(t0_single - 0.25) < 1e-10, f"T0(1)={t0_single:.12f}")

    base = ExperimentConfig(
        fso_mean_snr_db=30.0, fso_rounds=2, rf_mean_snr_db=22.0, rf_rounds=2,
        per_enabled=True, mode="both", mc_samples=samples, mc_seed=seed,
    )
    fso = base.fso_config()
    rf = base.rf_config()
    harq = base.harq_config()
    series = accumulate_rounds(single_round_series(fso), fso.rounds_n1)

    res = outage_probability(series, rf, harq)
    est = simulate_outage(fso, rf, harq, samples, seed, rf_exact=False)
    dev = abs(est.value - res.op) / max(est.std_err, 5e-324)
    add(
        "op-analytic-vs-mc",
        dev <= 3.0,
        f"analytic={res.op:.6e} mc={est.value:.6e}+-{est.std_err:.1e} ({dev:.2f} sd)",
    )

    pb = per_closed_form(series, rf, base.per_config())
    pest = simulate_per(fso, rf, base.per_config(), samples, seed, rf_exact=False)
    dev = abs(pest.value - pb.value) / max(pest.std_err, 5e-324)
    add(
        "per-analytic-vs-mc",
        dev <= 3.0,
        f"analytic={pb.value:.6e} mc={pest.value:.6e}+-{pest.std_err:.1e} ({dev:.2f} sd)",
    )

    ident = abs(pb.fidelity - pb.value) / max(pb.value, 5e-324)
    add("per-termwise-identity", ident < 1e-6, f"rel dev {ident:.2e}")

    n_exact = max(10000, samples // 10)
    est_exact = simulate_outage(fso, rf, harq, n_exact, seed + 1, rf_exact=True)
    rel = abs(est_exact.value - res.op) / max(res.op, 5e-324)
    tol = 0.10 + 3.0 * est_exact.std_err / max(res.op, 5e-324)
    add(
        "surrogate-vs-exact-cascade",
        rel <= tol,
        f"analytic={res.op:.4e} exact-mc={est_exact.value:.4e} rel={rel:.3f}",
    )

    # monotonicity spot checks (analytic only, coarse)
    def op_at(**kw) -> float:
        c = replace(base, mode="analytic", **kw)
        f = c.fso_config()
        s = accumulate_rounds(single_round_series(f), f.rounds_n1)
        return outage_probability(s, c.rf_config(), c.harq_config()).op

    add(
        "op-decreasing-in-fso-snr",
        op_at(fso_mean_snr_db=30.0) > op_at(fso_mean_snr_db=40.0),
        "30 dB vs 40 dB",
    )
    add(
        "op-decreasing-in-reflectors",
        op_at(rf_reflectors=32) > op_at(rf_reflectors=128),
        "M=32 vs M=128",
    )
    add(
        "hd-beats-imdd",
        op_at(fso_detection="hd") < op_at(fso_detection="imdd"),
        "same mean SNR",
    )

    ok_all = True
    for name, ok, detail in checks:
        stream.write(f"{'PASS' if ok else 'FAIL'}  {name:32s} {detail}\n")
        ok_all &= ok
    return ok_all


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )
    p.add_argument("--out", help="output CSV path (default: stdout)")


def _resolved(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config_file(args.config, cfg)
    cfg = parse_assignments(args.set, cfg)
    if args.out:
        cfg = replace(cfg, output=args.out)
    return cfg


def _open_out(cfg: ExperimentConfig):
    if cfg.output in ("-", ""):
        return sys.stdout, False
    return open(cfg.output, "w", encoding="utf-8"), True


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fsorf",
        description="Outage and packet-error analysis for a two-hop "
        "optical/RF relay link with retransmission combining",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run one parameter sweep")
    _add_common(p_sweep)

    p_fig = sub.add_parser("figure", help="run a named figure preset")
    p_fig.add_argument("figure_id", help="figure id: 2, 3, 4, 5 or 6")
    _add_common(p_fig)

    p_fit = sub.add_parser("fit-nakagami", help="print the surrogate fit")
    p_fit.add_argument("--reflectors", type=int, default=128)
    p_fit.add_argument("--kappa", type=float, default=2.0)
    p_fit.add_argument("--rician-k", type=float, default=2.0)
    p_fit.add_argument("--samples", type=int, default=0,
                       help="optional sampling cross-check size")
    p_fit.add_argument("--seed", type=int, default=20260810)

    p_val = sub.add_parser("validate", help="analytic-vs-sampling cross checks")
    p_val.add_argument("--samples", type=int, default=200_000)
    p_val.add_argument("--seed", type=int, default=20260810)

    p_t0 = sub.add_parser("t0", help="waterfall threshold for a packet size")
    p_t0.add_argument("--packet-bits", type=int, required=True)

    args = parser.parse_args(argv)

    if args.command == "sweep":
        cfg = _resolved(args)
        rows = run_sweep(cfg)
        stream, close = _open_out(cfg)
        try:
            write_csv(rows, cfg, stream)
        finally:
            if close:
                stream.close()
        return 0

    if args.command == "figure":
        curves = figure_preset(args.figure_id)
        base = ExperimentConfig()
        if args.config:
            base = load_config_file(args.config, base)
        rows_all: list[SweepRow] = []
        labels: list[str] = []
        header_cfg = None
        for label, cfg in curves:
            cfg = parse_assignments(args.set, cfg)
            if args.out:
                cfg = replace(cfg, output=args.out)
            header_cfg = header_cfg or cfg
            for row in run_sweep(cfg):
                rows_all.append(row)
                labels.append(label)
        stream, close = _open_out(header_cfg)
        try:
            write_csv(rows_all, header_cfg, stream, curve_labels=labels)
        finally:
            if close:
                stream.close()
        return 0

    if args.command == "fit-nakagami":
        irs = IrsParams(
            m_reflectors=args.reflectors, kappa=args.kappa, rician_k=args.rician_k
        )
        fit = fit_nakagami(irs)
        print(f"m_shape = {fit.m_shape:.9g}")
        print(f"mu2     = {fit.mu2:.9g}")
        if args.samples > 0:
            est = estimate_moments(irs, args.samples, args.seed)
            print(
                f"sampled mu2 = {est.power2:.9g} +- {est.power2_std_err:.2g}"
                f"  ({est.n_samples} draws)"
            )
        return 0

    if args.command == "validate":
        ok = run_validation(args.samples, args.seed, sys.stdout)
        return 0 if ok else 1

    if args.command == "t0":
        t0 = waterfall_threshold(PerConfig(packet_bits=args.packet_bits))
        print(f"T0 = {t0:.12g} ({10.0 * math.log10(t0):.6f} dB)")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""
FTN Toeplitz Toolkit — Main Entry Point
Runs one experiment per invocation and writes its tables to the output directory.

Usage:
    python main.py gramian --set pulse=rrc --set rho=0.9 --set n=256
    python main.py localize --threads 4
    python main.py approx
    python main.py simulate --seed 7 --set snr_grid=0,2,4,6,8
    python main.py capacity --set snr_ratio=10
    python main.py effective-pulse --config experiments/effective.env --out results/eff
"""

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime
from typing import Callable, Dict, List, Optional, Sequence

# ═══════════════════════════════════════════════════════════════
# Ensure project root is on sys.path so the flat modules import
# regardless of the working directory
# ═══════════════════════════════════════════════════════════════
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import numpy as np
import pandas as pd
from rich.console import Console

from capacity import (
    AVERAGE_POWER_CAVEAT, capacity_beta_sweep, capacity_rho_sweep, ftn_naive_capacity,
    precoded_rrc_capacity, shannon_capacity,
)
from config import (
    ALTERNATING_NARROW_TARGET, ALTERNATING_TOLERANCE, ALTERNATING_WIDE_TARGET,
    EXPERIMENT_KINDS, LOG_DATEFMT, LOG_FILE, LOG_FORMAT, OUTPUT_DIR, OUTSIDE_ENERGY_CLAIM, ExperimentConfig,
    TransmissionConfig,
)
from errors import EXIT_OK, FTNError, IllConditionedError, InvalidConfig
from localization import (
    effective_pulse, effective_pulse_distance, ftn_least_squares, localization_report,
    max_energy_outside, outside_energy_sweep, outside_gramian, reference_pulse, synthesize,
)
from precoded_channel import BerPoint, BerSimulator
from pulse_models import Interval, PulseShape, ShiftedPulse, TimeShiftGrid
from report_generator import ReportGenerator
from toeplitz_gramian import (
    build_rrc_gramian, build_sinc_gramian, eigen_summary, gramian_for_grid,
    szego_distribution_gap,
)

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════
# LOGGING SETUP
# ═══════════════════════════════════════════════════════════════

def setup_logging(quiet: bool = False, log_dir: Optional[str] = None) -> Optional[str]:
    """
    Console handler at INFO (WARNING when quiet) and a run log in `log_dir`
    that always records INFO. Returns the log path, or None if it could not
    be opened.
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.INFO)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT)

    console = logging.StreamHandler(sys.stdout)
    console.setLevel(logging.WARNING if quiet else logging.INFO)
    console.setFormatter(formatter)
    root.addHandler(console)

    path = os.path.join(log_dir or OUTPUT_DIR, LOG_FILE)
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        run_log = logging.FileHandler(path, mode="a", encoding="utf-8")
    except OSError as e:
        logger.warning(f"Run log {path} unavailable: {e}")
        return None
    run_log.setFormatter(formatter)
    root.addHandler(run_log)
    return path


def _banner(title: str):
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)


def _claim(name: str, value: float, target: str, passed: Optional[bool]) -> Dict:
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    logger.info(f"  [{status}] {name}: {value:.6g} (target {target})")
    return {"claim": name, "value": value, "target": target, "status": status}


def _time_axis(start: float, stop: float, step: float) -> np.ndarray:
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _parallel_map(func: Callable, items: Sequence, threads: int) -> List:
    """Ordered map; results come back in input order whatever the scheduling."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


# ═══════════════════════════════════════════════════════════════
# EXPERIMENTS
# ═══════════════════════════════════════════════════════════════

def cmd_gramian(config: ExperimentConfig, reporter: ReportGenerator):
    """Coefficients, symbol samples and eigenvalue summary of one Gramian."""
    p = config.params
    _banner(f"GRAMIAN: {p['pulse']} rho={p['rho']:g} n={p['n']}")

    T = 1.0 / (2.0 * p["w"])
    if p["pulse"] == "sinc":
        normalization = p["normalization"] or "unit"
        beta = 0.0
        H = build_sinc_gramian(p["rho"], p["n"], p["w"], normalization)
    else:
        normalization = p["normalization"] or "sqrt_rho"
        beta = p["beta"]
        H = build_rrc_gramian(p["rho"], beta, p["n"], T, normalization)

    echo = config.echo()
    echo["params"]["normalization"] = normalization

    coefficients = pd.DataFrame({"k": np.arange(H.order_n), "c_k": H.coefficients})
    reporter.write_table("gramian_coefficients", coefficients, echo)

    z, f_z = H.symbol.sample(p["symbol_points"])
    reporter.write_table("gramian_symbol", pd.DataFrame({"z": z, "f_z": f_z}), echo)

    summary = eigen_summary(H)
    summary["szego_gap_identity"] = szego_distribution_gap(H, lambda x: x)
    summary["szego_gap_square"] = szego_distribution_gap(H, lambda x: x * x)
    tolerance = H.default_tolerance()
    summary["min_lambda_tol"] = tolerance
    summary["conditioned"] = bool(summary["lambda_min"] >= tolerance)
    row = {"pulse": p["pulse"], "rho": p["rho"], "beta": beta,
           "normalization": normalization, **summary}
    reporter.write_table("gramian_eigen_summary", pd.DataFrame([row]), echo)
    reporter.print_summary("Gramian eigenvalues", [
        {"n": row["n"], "lambda_min": row["lambda_min"], "lambda_max": row["lambda_max"],
         "inf_f": row["inf_f"], "sup_f": row["sup_f"], "szego_gap": row["szego_gap_identity"]},
    ])

    if not summary["conditioned"]:
        raise IllConditionedError(
            f"Gramian lambda_min = {summary['lambda_min']:.3e} is below {tolerance:.3e}; "
            f"H^(-1/2) is not available", summary["lambda_min"], rho=p["rho"], beta=beta)


def cmd_localize(config: ExperimentConfig, reporter: ReportGenerator):
    """Worst-case outside-energy sweep, worst-case signal and alternating-sign concentration."""
    p = config.params
    n = p["n"]
    T = 1.0 / (2.0 * p["w"])
    pulse = PulseShape.sinc(p["w"])
    echo = config.echo()
    _banner(f"LOCALIZATION: n={n}, rho in {p['rho_values']}")

    def sweep(rho: float):
        grid = TimeShiftGrid.from_nyquist(n, rho, T)
        return rho, outside_energy_sweep(grid, pulse, n, p["margins"])

    swept = _parallel_map(sweep, p["rho_values"], config.threads)
    sweep_df = pd.DataFrame([{"rho": rho, "n": n, "m": m, "lambda_max": lam}
                             for rho, rows in swept for m, lam in rows])
    reporter.write_table("outside_energy_sweep", sweep_df, echo)

    # worst case at the captioned point
    grid_c = TimeShiftGrid.from_nyquist(n, p["claim_rho"], T)
    margin = p["claim_margin"]
    omega = Interval(-margin * T, (margin + n - 1) * T)
    lam_c, worst = max_energy_outside(gramian_for_grid(grid_c, pulse),
                                      outside=outside_gramian(grid_c, pulse, omega))
    t = _time_axis(omega.a - 5 * T, omega.b + 5 * T, T / p["samples_per_symbol"])
    reporter.write_table("worst_case_signal",
                         pd.DataFrame({"t": t, "amplitude": synthesize(worst, grid_c, pulse, t)}),
                         echo, extra_meta={"rho": p["claim_rho"], "m": margin, "lambda_max": lam_c})

    # alternating signs
    rho_a, m_a = p["alt_rho"], p["alt_m"]
    grid_a = TimeShiftGrid(rho_a, m_a, T)
    coeffs = np.where(np.arange(m_a) % 2 == 0, 1.0, -1.0)
    wide = localization_report(coeffs, grid_a, pulse, Interval(-rho_a * T, rho_a * m_a * T))
    narrow = localization_report(coeffs, grid_a, pulse, Interval(0.0, rho_a * (m_a - 1) * T))
    alt_rows = [{"rho": rho_a, "m": m_a, "interval_a": r.interval.a, "interval_b": r.interval.b,
                 "concentration": r.concentration, "mu": r.mu,
                 "worst_case_outside": r.worst_case_outside} for r in (wide, narrow)]
    reporter.write_table("alternating_concentration", pd.DataFrame(alt_rows), echo)
    t_alt = _time_axis(-10 * T, grid_a.shifts[-1] + 10 * T, T / p["samples_per_symbol"])
    reporter.write_table("alternating_signal",
                         pd.DataFrame({"t": t_alt, "amplitude": synthesize(coeffs, grid_a, pulse, t_alt)}),
                         echo)

    claims = [
        _claim(f"outside energy rho={p['claim_rho']:g} n={n} m={margin}", lam_c,
               f"> {OUTSIDE_ENERGY_CLAIM:g}", lam_c > OUTSIDE_ENERGY_CLAIM),
        _claim("alternating concentration on [-rho, rho m]", wide.concentration,
               f"{ALTERNATING_WIDE_TARGET:g} +/- {ALTERNATING_TOLERANCE:g}",
               abs(wide.concentration - ALTERNATING_WIDE_TARGET) <= ALTERNATING_TOLERANCE),
        _claim("alternating concentration on [0, rho (m-1)]", narrow.concentration,
               f"{ALTERNATING_NARROW_TARGET:g} +/- {ALTERNATING_TOLERANCE:g}",
               abs(narrow.concentration - ALTERNATING_NARROW_TARGET) <= ALTERNATING_TOLERANCE),
    ]
    by_rho = {rho: dict(rows) for rho, rows in swept}
    if 1.0 in by_rho and len(by_rho) > 1:
        violations = sum(1 for m in p["margins"]
                         if any(by_rho[1.0][m] > rows[m] + 1e-12
                                for rho, rows in by_rho.items() if rho != 1.0))
        claims.append(_claim("rho=1 has the smallest outside energy at every m", violations,
                             "0 violations", violations == 0))
    else:
        claims.append(_claim("rho=1 has the smallest outside energy at every m", float("nan"),
                             "needs rho=1 and another rho", None))
    reporter.write_table("localization_claims", pd.DataFrame(claims), echo)
    reporter.print_summary("Localization claims", claims)


def cmd_approx(config: ExperimentConfig, reporter: ReportGenerator):
    """Least-squares approximation of a delayed sinc by FTN pulse trains."""
    p = config.params
    T = 1.0 / (2.0 * p["w"])
    pulse = PulseShape.sinc(p["w"])
    target = ShiftedPulse(pulse, p["target_center"] * T)
    echo = config.echo()
    _banner(f"APPROXIMATION: sinc at t={p['target_center']:g}T from pulses on [0, {p['span']:g}T]")

    def fit(rho: float):
        grid = TimeShiftGrid(rho, int(math.floor(p["span"] / rho + 1e-9)) + 1, T)
        coeffs, residual = ftn_least_squares(target, grid, pulse)
        return rho, grid, coeffs, residual

    fits = _parallel_map(fit, p["rho_values"], config.threads)
    rows = [{"rho": rho, "m": grid.count_m, "residual_l2": residual,
             "relative_error": residual / math.sqrt(target.energy)}
            for rho, grid, _, residual in fits]
    residuals = pd.DataFrame(rows)
    reporter.write_table("approximation_residuals", residuals, echo)

    start = min(0.0, p["target_center"]) * T - 4 * T
    stop = max(p["span"], p["target_center"]) * T + 4 * T
    t = _time_axis(start, stop, T / p["samples_per_symbol"])
    waves = {"t": t, "target": target(t)}
    for rho, grid, coeffs, _ in fits:
        waves[f"rho_{rho:.6g}"] = synthesize(coeffs, grid, pulse, t)
    reporter.write_table("approximation_waveforms", pd.DataFrame(waves), echo)

    ordered = residuals.sort_values("rho", ascending=False)["residual_l2"].to_numpy()
    finest = residuals.loc[residuals["rho"].idxmin()]
    claims = [
        _claim("residual decreases with rho", float(np.max(np.diff(ordered))) if len(ordered) > 1 else 0.0,
               "all steps < 0", bool(np.all(np.diff(ordered) < 0)) if len(ordered) > 1 else None),
        _claim(f"relative error at rho={finest['rho']:.6g}", float(finest["relative_error"]),
               f"< {p['claim_threshold']:g}", bool(finest["relative_error"] < p["claim_threshold"])),
    ]
    reporter.write_table("approximation_claims", pd.DataFrame(claims), echo)
    reporter.print_summary("Approximation residuals", rows)
    reporter.print_summary("Approximation claims", claims)


def _ber_rows(points: List[BerPoint], tc: TransmissionConfig) -> List[Dict]:
    return [{
        "snr_db": pt.snr_db, "rho": tc.rho, "beta": tc.beta if tc.pulse == "rrc" else 0.0,
        "n": tc.block_m, "precoder_mode": pt.precoder_mode, "bits": pt.bits, "errors": pt.errors,
        "ber": pt.ber, "ci_low": pt.ci_low, "ci_high": pt.ci_high, "q_oracle": pt.q_oracle,
        "energy_convention": tc.energy_convention.value, "normalization": tc.normalization,
        "block_errors": pt.block_errors, "bler": pt.bler,
    } for pt in points]


def cmd_simulate(config: ExperimentConfig, reporter: ReportGenerator):
    """Monte Carlo BER of precoded FTN BPSK, optionally with the rho = 1 baseline."""
    p = config.params
    tc = TransmissionConfig(rho=p["rho"], beta=p["beta"], W=p["w"], block_m=p["block_m"], Es=p["es"],
                            seed=config.seed, precoder_mode=p["precoder"], pulse=p["pulse"],
                            energy_convention=p["energy_convention"], normalization=p["normalization"])
    snr_grid = list(p["snr_grid"]) + ([math.inf] if p["include_noiseless"] else [])
    _banner(f"SIMULATION: {tc.pulse} rho={tc.rho:.6g} m={tc.block_m} seed={tc.seed}")

    rows = _ber_rows(BerSimulator(tc, threads=config.threads).run_all(snr_grid, p["min_bits"]), tc)
    if p["baseline"] and tc.rho != 1.0:
        base = replace(tc, rho=1.0)
        logger.info("Nyquist-rate baseline (rho = 1), same block streams")
        rows += _ber_rows(BerSimulator(base, threads=config.threads).run_all(snr_grid, p["min_bits"]), base)

    reporter.write_table("ber", pd.DataFrame(rows), config.echo(), extra_meta={"transmission": tc.as_dict()})
    reporter.print_summary("BER vs SNR", [
        {k: r[k] for k in ("snr_db", "rho", "bits", "errors", "ber", "ci_low", "ci_high", "q_oracle")}
        for r in rows])


def cmd_capacity(config: ExperimentConfig, reporter: ReportGenerator):
    """Naive FTN capacity over rho, precoded RRC capacity over beta, paradox markers."""
    p = config.params
    W, ratio = p["w"], p["snr_ratio"]
    echo = config.echo()
    _banner(f"CAPACITY: P/(N0 W) = {ratio:g}")

    rho_df = capacity_rho_sweep(p["rho_min"], p["rho_max"], p["rho_points"], ratio, W)
    reporter.write_table("capacity_rho_sweep", rho_df, echo, extra_meta={"caveat": AVERAGE_POWER_CAVEAT})
    beta_df = capacity_beta_sweep(p["beta_values"], ratio, W)
    reporter.write_table("capacity_beta_sweep", beta_df, echo)

    P = ratio * W
    c_claim = ftn_naive_capacity(p["claim_rho"], W, P, 1.0)
    c_one = ftn_naive_capacity(1.0, W, P, 1.0)
    steps = np.diff(rho_df["capacity"].to_numpy())
    claims = [
        _claim(f"C(rho={p['claim_rho']:g}) - C(1)", c_claim - c_one, "> 0", c_claim > c_one),
        _claim("C(rho) strictly decreasing in rho", float(steps.max()), "all steps < 0",
               bool(np.all(steps < 0))),
        _claim("precoded RRC at beta=0 minus Shannon",
               precoded_rrc_capacity(0.0, W, P, 1.0) - shannon_capacity(W, P, 1.0), "0 within 1e-12",
               abs(precoded_rrc_capacity(0.0, W, P, 1.0) - shannon_capacity(W, P, 1.0)) <= 1e-12),
    ]
    reporter.write_table("capacity_claims", pd.DataFrame(claims), echo,
                         extra_meta={"caveat": AVERAGE_POWER_CAVEAT})
    logger.warning(f"Caveat: {AVERAGE_POWER_CAVEAT}")
    reporter.print_summary("Capacity claims", claims)


def cmd_effective_pulse(config: ExperimentConfig, reporter: ReportGenerator):
    """Convergence of the precoded RRC effective pulse to a flat-spectrum sinc."""
    p = config.params
    beta, ell = p["beta"], p["ell"]
    T = 1.0 / (2.0 * p["w"])
    Tprime = T / (1.0 + beta)
    pulse = PulseShape.rrc(beta, T)
    echo = config.echo()
    _banner(f"EFFECTIVE PULSE: beta={beta:g}, T'={Tprime:.6g}, ell={ell}")

    def converge(n: int) -> Dict:
        distance = effective_pulse_distance(n, ell, pulse, Tprime)
        peak = float(effective_pulse(n, ell, pulse, Tprime, np.array([ell * Tprime]))[0])
        logger.info(f"  n={n}: L2 distance {distance:.6g}, peak {peak:.6g}")
        return {"n": n, "l2_distance": distance, "peak": peak,
                "reference_peak": 1.0 / math.sqrt(Tprime)}

    rows = _parallel_map(converge, sorted(p["half_widths"]), config.threads)
    reporter.write_table("effective_pulse_convergence", pd.DataFrame(rows), echo)
    distances = [r["l2_distance"] for r in rows]
    if any(b >= a for a, b in zip(distances, distances[1:])):
        logger.warning("L2 distance to the reference pulse is not decreasing in n")

    n_max = rows[-1]["n"]
    t = _time_axis(ell * Tprime - p["t_span"] * T, ell * Tprime + p["t_span"] * T,
                   T / p["samples_per_symbol"])
    waveform = pd.DataFrame({"t": t, "amplitude": effective_pulse(n_max, ell, pulse, Tprime, t),
                             "reference": reference_pulse(ell, Tprime, t)})
    reporter.write_table("effective_pulse_waveform", waveform, echo, extra_meta={"n": n_max})
    reporter.print_summary("Effective pulse convergence", rows)


COMMANDS: Dict[str, Callable[[ExperimentConfig, ReportGenerator], None]] = {
    "gramian": cmd_gramian,
    "localize": cmd_localize,
    "approx": cmd_approx,
    "simulate": cmd_simulate,
    "capacity": cmd_capacity,
    "effective-pulse": cmd_effective_pulse,
}


# ═══════════════════════════════════════════════════════════════
# MAIN
# ═══════════════════════════════════════════════════════════════

def _parse_overrides(pairs: List[str]) -> Dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise InvalidConfig(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat KEY=VALUE experiment file")
    common.add_argument("--out", help=f"Output directory (default: {OUTPUT_DIR})")
    common.add_argument("--seed", type=int, help="Unsigned 64-bit seed (required for simulate)")
    common.add_argument("--threads", type=int, help="Worker threads for sweeps and Monte Carlo blocks")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one config key; repeatable, wins over --config")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        description="FTN Toeplitz Toolkit — Gramians, localization, precoding and capacity of FTN signaling")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        sub.add_parser(kind, parents=[common], help=COMMANDS[kind].__doc__)
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    log_path = setup_logging(quiet=args.quiet, log_dir=args.out)

    logger.info("+" + "=" * 58 + "+")
    logger.info("|               FTN TOEPLITZ TOOLKIT                       |")
    logger.info("+" + "=" * 58 + "+")
    logger.info(f"Started:    {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info(f"Experiment: {args.kind}")
    if log_path:
        logger.info(f"Run log:    {log_path}")

    start = time.time()
    try:
        config = ExperimentConfig.load(args.kind, args.config, _parse_overrides(args.set),
                                       seed=args.seed, threads=args.threads, out_dir=args.out)
        logger.info(f"Output:     {config.out_dir}")
        reporter = ReportGenerator(config.out_dir, console=Console(quiet=args.quiet))
        COMMANDS[config.kind](config, reporter)
        reporter.print_footer()
    except FTNError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("\nInterrupted. Tables written so far are kept.")
        return 130
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return FTNError.exit_code

    logger.info(f"\nRun time: {time.time() - start:.1f}s")
    logger.info("Done!")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

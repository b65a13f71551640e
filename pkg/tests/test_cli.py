import json
import logging
import os

import pandas as pd
import pytest

from main import main, setup_logging


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--quiet"])


def test_capacity_command(tmp_path):
    assert _run(tmp_path, "capacity") == 0
    for name in ("capacity_rho_sweep", "capacity_beta_sweep", "capacity_claims"):
        assert (tmp_path / f"{name}.csv").exists()
        assert (tmp_path / f"{name}.meta.json").exists()
    claims = pd.read_csv(tmp_path / "capacity_claims.csv")
    assert (claims["status"] == "PASS").all()
    meta = json.loads((tmp_path / "capacity_rho_sweep.meta.json").read_text())
    assert meta["kind"] == "capacity"
    assert meta["columns"] == ["rho_or_beta", "snr_ratio", "capacity"]
    assert "caveat" in meta


def test_gramian_command_nyquist_sinc(tmp_path):
    assert _run(tmp_path, "gramian", "--set", "pulse=sinc", "--set", "rho=1", "--set", "n=8") == 0
    coefficients = pd.read_csv(tmp_path / "gramian_coefficients.csv")
    assert list(coefficients.columns) == ["k", "c_k"]
    assert coefficients["c_k"].iloc[0] == pytest.approx(1.0)
    summary = pd.read_csv(tmp_path / "gramian_eigen_summary.csv")
    assert bool(summary["conditioned"].iloc[0])


def test_gramian_command_ill_conditioned(tmp_path):
    code = _run(tmp_path, "gramian", "--set", "pulse=rrc", "--set", "rho=0.5", "--set", "n=64")
    assert code == 3
    assert (tmp_path / "gramian_eigen_summary.csv").exists()


def test_invalid_configuration_exit_codes(tmp_path):
    assert _run(tmp_path, "simulate") == 2
    assert _run(tmp_path, "capacity", "--set", "bogus=1") == 2
    assert _run(tmp_path, "capacity", "--set", "no_equals_sign") == 2


def test_simulate_is_reproducible_across_thread_counts(tmp_path):
    args = ["simulate", "--seed", "5", "--set", "block_m=32", "--set", "min_bits=2000",
            "--set", "snr_grid=0,4", "--set", "baseline=false"]
    one, two = tmp_path / "one", tmp_path / "two"
    assert main([*args, "--threads", "1", "--out", str(one), "--quiet"]) == 0
    assert main([*args, "--threads", "2", "--out", str(two), "--quiet"]) == 0
    assert (one / "ber.csv").read_bytes() == (two / "ber.csv").read_bytes()

    ber = pd.read_csv(one / "ber.csv")
    assert len(ber) == 3
    noiseless = ber[ber["snr_db"] == float("inf")]
    assert noiseless["ber"].iloc[0] == 0.0
    assert (ber["precoder_mode"] == "exact").all()
    meta = json.loads((one / "ber.meta.json").read_text())
    assert meta["seed"] == 5
    assert meta["rng"] == "numpy.random.Philox"


def test_effective_pulse_command(tmp_path):
    assert _run(tmp_path, "effective-pulse", "--set", "half_widths=4,8") == 0
    convergence = pd.read_csv(tmp_path / "effective_pulse_convergence.csv")
    assert convergence["n"].tolist() == [4, 8]
    assert convergence["l2_distance"].iloc[1] < convergence["l2_distance"].iloc[0]
    assert (tmp_path / "effective_pulse_waveform.csv").exists()


def test_approx_command(tmp_path):
    assert _run(tmp_path, "approx") == 0
    residuals = pd.read_csv(tmp_path / "approximation_residuals.csv")
    assert residuals["rho"].tolist() == pytest.approx([1 / 2, 1 / 3, 1 / 4])
    assert residuals["residual_l2"].is_monotonic_decreasing
    waves = pd.read_csv(tmp_path / "approximation_waveforms.csv")
    assert list(waves.columns)[:2] == ["t", "target"]


def test_localize_command(tmp_path):
    code = _run(tmp_path, "localize", "--set", "rho_values=0.81,1", "--set", "margins=0,5,15",
                "--set", "alt_m=60", "--threads", "2")
    assert code == 0
    sweep = pd.read_csv(tmp_path / "outside_energy_sweep.csv")
    assert list(sweep.columns) == ["rho", "n", "m", "lambda_max"]
    assert len(sweep) == 6
    claims = pd.read_csv(tmp_path / "localization_claims.csv")
    first = claims.iloc[0]
    assert first["status"] == "PASS"


def test_localize_command_with_default_alternating_block(tmp_path):
    code = _run(tmp_path, "localize", "--set", "rho_values=0.9,1", "--set", "margins=0,5")
    assert code == 0
    alternating = pd.read_csv(tmp_path / "alternating_concentration.csv")
    assert alternating["m"].tolist() == [400, 400]
    claims = pd.read_csv(tmp_path / "localization_claims.csv").set_index("claim")
    assert claims.loc["alternating concentration on [-rho, rho m]", "status"] == "PASS"


def test_approx_command_writes_claims(tmp_path):
    assert _run(tmp_path, "approx") == 0
    claims = pd.read_csv(tmp_path / "approximation_claims.csv")
    assert (tmp_path / "approximation_claims.meta.json").exists()
    assert (claims["status"] == "PASS").all()


def test_setup_logging_opens_run_log(tmp_path):
    path = setup_logging(quiet=True, log_dir=str(tmp_path))
    assert path is not None
    logging.getLogger("main").warning("run log check")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "run log check" in (tmp_path / os.path.basename(path)).read_text()

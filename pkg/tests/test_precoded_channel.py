import math
from dataclasses import replace

import numpy as np
import pytest

from config import EnergyConvention, TransmissionConfig
from errors import InvalidArgument
from precoded_channel import (
    BerSimulator, block_stream, channel_pass, decode, gramian_for_config, payload_bits,
    physical_bits_for_block, precode, precoder_for_config, q_function, run_ber, simulate_block,
    snr_to_sigma, throughput, wilson_interval,
)
from toeplitz_gramian import PrecodingMode, build_rrc_gramian, inverse_sqrt_exact

RHO_EDGE = 1 / 1.22


def test_snr_to_sigma():
    assert snr_to_sigma(math.inf) == 0.0
    assert snr_to_sigma(20.0) == pytest.approx(0.1)
    assert snr_to_sigma(0.0) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        snr_to_sigma(-math.inf)


def test_q_function():
    assert float(q_function(0.0)) == pytest.approx(0.5)
    assert float(q_function(10 ** 0.2)) == pytest.approx(0.0565, abs=5e-4)
    np.testing.assert_allclose(q_function([-1.0, 1.0]).sum(), 1.0)


def test_wilson_interval():
    low, high = wilson_interval(50, 1000)
    assert low < 0.05 < high
    assert 0.0 <= low and high <= 1.0
    low, high = wilson_interval(0, 1000)
    assert low == 0.0 and 0.0 < high < 0.01
    low, high = wilson_interval(1000, 1000)
    assert high == 1.0 and 0.99 < low < 1.0
    assert wilson_interval(0, 1)[0] == 0.0 and wilson_interval(1, 1)[1] == 1.0
    with pytest.raises(InvalidArgument):
        wilson_interval(5, 0)
    with pytest.raises(InvalidArgument):
        wilson_interval(11, 10)


def test_throughput_and_block_sizes():
    assert throughput(0.1, 1000) == pytest.approx(900.0)
    assert throughput(0.0, 0) == 0.0
    with pytest.raises(InvalidArgument):
        throughput(1.5, 100)
    with pytest.raises(InvalidArgument):
        throughput(0.5, -1)
    assert physical_bits_for_block(RHO_EDGE) == 4880
    assert physical_bits_for_block(1.0) == 4000
    assert payload_bits(4880, 0.5) == pytest.approx(2440.0)
    with pytest.raises(InvalidArgument):
        payload_bits(4880, 0.0)


def test_block_stream_is_deterministic_and_independent():
    a = block_stream(42, 3).standard_normal(8)
    b = block_stream(42, 3).standard_normal(8)
    c = block_stream(42, 4).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_noiseless_roundtrip():
    H = build_rrc_gramian(0.9, 0.22, 512)
    K = inverse_sqrt_exact(H)
    x = np.where(np.random.default_rng(2).integers(0, 2, 512) == 1, 1.0, -1.0)
    s = decode(channel_pass(precode(x, K), H, 0.0, None), K)
    assert np.max(np.abs(s - x)) < 1e-8


def test_noisy_channel_needs_a_stream():
    H = build_rrc_gramian(0.9, 0.22, 8)
    with pytest.raises(InvalidArgument):
        channel_pass(np.ones(8), H, 1.0, None)
    with pytest.raises(InvalidArgument):
        channel_pass(np.ones(8), H, -1.0, None)


def test_decoded_noise_is_white():
    n, count, N0 = 8, 100_000, 2.0
    H = build_rrc_gramian(0.9, 0.22, n)
    K = inverse_sqrt_exact(H)
    noise = decode(channel_pass(np.zeros((n, count)), H, N0, np.random.default_rng(11)), K)
    cov = noise @ noise.T / count
    # variance of a sample variance with true value N0/2 is 2 (N0/2)^2 / count
    se = math.sqrt(2.0 / count) * N0 / 2
    assert np.all(np.abs(np.diag(cov) - N0 / 2) < 4.5 * se)
    corr = cov / np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
    off = corr[~np.eye(n, dtype=bool)]
    assert np.max(np.abs(off)) < 0.05


def test_noiseless_block_has_no_errors():
    config = TransmissionConfig(rho=0.9, block_m=256, snr_db=math.inf, seed=1)
    result = simulate_block(config, 0)
    assert result.bit_errors == 0
    assert not result.block_error
    np.testing.assert_allclose(np.abs(result.decoded_soft), math.sqrt(config.sample_energy), atol=1e-8)


def test_ber_matches_q_oracle_at_edge_of_packing():
    config = TransmissionConfig(rho=RHO_EDGE, block_m=128, seed=7)
    point = run_ber(config, [4.0], min_bits=20_000)[0]
    p = float(q_function(math.sqrt(RHO_EDGE) * 10 ** 0.2))
    expected = point.bits * p
    sd = math.sqrt(point.bits * p * (1 - p))
    assert abs(point.errors - expected) < 4.5 * sd
    assert point.q_oracle == pytest.approx(p)
    assert point.ci_low <= point.ber <= point.ci_high
    assert point.precoder_mode == "exact"


def test_ber_is_reproducible_across_threads():
    config = TransmissionConfig(rho=0.9, block_m=64, seed=5)
    one = run_ber(config, [0.0, 4.0], min_bits=2000, threads=1)
    two = run_ber(config, [0.0, 4.0], min_bits=2000, threads=2)
    assert [(p.errors, p.block_errors) for p in one] == [(p.errors, p.block_errors) for p in two]


def test_circulant_request_falls_back_to_exact_on_vanishing_symbol():
    config = TransmissionConfig(rho=RHO_EDGE, block_m=64, precoder_mode="circulant")
    K = precoder_for_config(config, gramian_for_config(config))
    assert K.mode is PrecodingMode.EXACT
    interior = TransmissionConfig(rho=0.9, block_m=64, precoder_mode="circulant")
    assert precoder_for_config(interior, gramian_for_config(interior)).mode is PrecodingMode.CIRCULANT


def test_simulator_rejects_bad_thread_count():
    with pytest.raises(InvalidArgument):
        BerSimulator(TransmissionConfig(rho=0.9, block_m=8), threads=0)


def test_transmission_config():
    config = TransmissionConfig(rho=0.8, Es=2.0, energy_convention="nyquist_power")
    assert config.sample_energy == pytest.approx(1.6)
    assert replace(config, energy_convention="per_sample").sample_energy == pytest.approx(2.0)
    assert TransmissionConfig(N0=2.0).sigma == pytest.approx(1.0)
    assert TransmissionConfig(snr_db=20.0).sigma == pytest.approx(0.1)
    assert TransmissionConfig(snr_db=20.0).noise_density == pytest.approx(0.02)
    assert TransmissionConfig(W=2.0).symbol_time_T == pytest.approx(0.25)
    for bad in ({"rho": 0.0}, {"rho": 1.5}, {"beta": 1.2}, {"block_m": 0}, {"seed": -1},
                {"pulse": "gauss"}, {"precoder_mode": "fast"}, {"snr_db": float("nan")}):
        with pytest.raises(InvalidArgument):
            TransmissionConfig(**bad)


def test_default_energy_convention_spends_rho_es_per_sample():
    config = TransmissionConfig(rho=RHO_EDGE, block_m=128, Es=1.0)
    assert config.energy_convention is EnergyConvention.NYQUIST_POWER
    assert config.as_dict()["energy_convention"] == "nyquist_power"
    H = gramian_for_config(config)
    K = precoder_for_config(config, H)
    rng = block_stream(config.seed, 0)
    x = np.where(rng.integers(0, 2, config.block_m) == 1, 1.0, -1.0) * math.sqrt(config.sample_energy)
    a = precode(x, K)
    # transmitted energy of the whole block equals rho * m * Es
    assert float(a @ H.matvec(a)) == pytest.approx(RHO_EDGE * config.block_m * config.Es, rel=1e-9)
    with pytest.raises(InvalidArgument):
        TransmissionConfig(energy_convention="per_bit")


def test_channel_noise_covariance_is_scaled_gramian():
    n, count, N0 = 6, 100_000, 2.0
    H = build_rrc_gramian(0.8, 0.22, n)
    y = channel_pass(np.zeros((n, count)), H, N0, np.random.default_rng(23))
    cov = y @ y.T / count
    sigma = N0 / 2.0 * H.dense()
    se = np.sqrt((np.outer(np.diag(sigma), np.diag(sigma)) + sigma ** 2) / count)
    assert np.all(np.abs(cov - sigma) < 4.5 * se)


def test_edge_packing_matches_oracle_and_nyquist_baseline_over_snr_grid():
    grid = [0.0, 2.0, 4.0, 6.0, 8.0]
    ftn = TransmissionConfig(rho=RHO_EDGE, block_m=128, seed=3, energy_convention="per_sample")
    baseline = replace(ftn, rho=1.0)
    ftn_points = run_ber(ftn, grid, min_bits=100_000)
    base_points = run_ber(baseline, grid, min_bits=100_000)
    for snr, point, base in zip(grid, ftn_points, base_points):
        assert point.bits >= 100_000 and point.snr_db == snr
        p = float(q_function(10 ** (snr / 20)))
        sd = math.sqrt(point.bits * p * (1 - p))
        assert abs(point.errors - point.bits * p) < 4.5 * sd
        assert point.q_oracle == pytest.approx(base.q_oracle)
        assert abs(point.errors - base.errors) < 4.5 * math.sqrt(2) * sd

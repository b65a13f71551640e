import math

import numpy as np
import pytest

from capacity import (
    AVERAGE_POWER_CAVEAT, average_power, capacity_beta_sweep, capacity_block, capacity_per_sample,
    capacity_rho_sweep, ftn_naive_capacity, paradox_gap, precoded_capacity, precoded_rrc_capacity,
    shannon_capacity,
)
from errors import InvalidArgument


def test_precoded_rrc_capacity_value():
    expected = 1.22 * math.log2(1 + 1 / 1.22)
    assert precoded_rrc_capacity(0.22, 1.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.0536, abs=1e-4)


def test_zero_rolloff_is_shannon():
    assert precoded_rrc_capacity(0.0, 2.0, 3.0, 0.5) == pytest.approx(shannon_capacity(2.0, 3.0, 0.5))
    assert ftn_naive_capacity(1.0, 2.0, 3.0, 0.5) == pytest.approx(shannon_capacity(2.0, 3.0, 0.5))


@pytest.mark.parametrize("beta", [0.1, 0.22, 0.5, 1.0])
def test_precoded_rrc_is_orthogonal_system_of_wider_band(beta):
    W, P, N0 = 1.0, 4.0, 1.0
    value = precoded_rrc_capacity(beta, W, P, N0)
    assert value == pytest.approx(precoded_capacity((1 + beta) * W, P, N0))
    assert value == pytest.approx(ftn_naive_capacity(1.0, (1 + beta) * W, P, N0))


def test_naive_ftn_capacity_exceeds_shannon():
    assert ftn_naive_capacity(0.8, 1.0, 1.0, 1.0) > ftn_naive_capacity(1.0, 1.0, 1.0, 1.0)
    assert paradox_gap(0.5, 1.0, 1.0, 1.0) > 0
    assert paradox_gap(0.5, 1.0, 0.0, 1.0) == pytest.approx(0.0)
    with pytest.raises(InvalidArgument):
        paradox_gap(1.0, 1.0, 1.0, 1.0)


def test_rho_sweep_is_strictly_decreasing():
    frame = capacity_rho_sweep(0.1, 1.0, 46, snr_ratio=1.0)
    assert list(frame.columns) == ["rho_or_beta", "snr_ratio", "capacity"]
    assert len(frame) == 46
    assert np.all(np.diff(frame["capacity"].to_numpy()) < 0)
    assert frame["capacity"].iloc[-1] == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        capacity_rho_sweep(0.9, 0.5, 10, snr_ratio=1.0)


def test_beta_sweep_is_increasing():
    frame = capacity_beta_sweep([0.0, 0.22, 0.5, 1.0], snr_ratio=1.0)
    values = frame["capacity"].to_numpy()
    assert values[0] == pytest.approx(1.0)
    assert np.all(np.diff(values) > 0)
    assert frame["rho_or_beta"].tolist() == [0.0, 0.22, 0.5, 1.0]


def test_block_and_sample_capacity():
    assert capacity_per_sample(0.5, 1.0) == pytest.approx(0.5)
    assert capacity_block(100, 0.5, 1.0, 1.0) == pytest.approx(50.0)
    assert capacity_block(0, 0.5, 1.0, 1.0) == 0.0
    with pytest.raises(InvalidArgument):
        capacity_per_sample(1.0, 0.0)


def test_average_power_identity():
    assert average_power(0.7, 2.0, 0.5) == pytest.approx(4.0)
    assert "localized" in AVERAGE_POWER_CAVEAT


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0, 1.0), (1.2, 1.0, 1.0, 1.0), (0.5, -1.0, 1.0, 1.0),
                                  (0.5, 1.0, -1.0, 1.0), (0.5, 1.0, 1.0, 0.0)])
def test_invalid_arguments(args):
    with pytest.raises(InvalidArgument):
        ftn_naive_capacity(*args)


def test_capacities_concave_in_power():
    powers = np.linspace(0.25, 20.0, 40)
    for capacity in (lambda P: ftn_naive_capacity(0.8, 1.0, P, 1.0),
                     lambda P: shannon_capacity(1.0, P, 1.0),
                     lambda P: precoded_rrc_capacity(0.22, 1.0, P, 1.0)):
        values = np.array([capacity(P) for P in powers])
        assert np.all(np.diff(values) > 0)
        assert np.all(np.diff(values, 2) < 0)


def test_rho_sweep_at_high_snr():
    frame = capacity_rho_sweep(0.5, 1.0, 100, snr_ratio=10.0)
    values = frame["capacity"].to_numpy()
    assert len(frame) == 100
    assert np.all(np.diff(values) < 0)
    assert ftn_naive_capacity(0.8, 1.0, 10.0, 1.0) > ftn_naive_capacity(1.0, 1.0, 10.0, 1.0)
    assert values[-1] == pytest.approx(math.log2(11.0))

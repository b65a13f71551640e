import math

import numpy as np
import pytest

from errors import InvalidArgument, NumericFailure
from pulse_models import (
    Interval, PulseKind, PulseShape, ShiftedPulse, TimeShiftGrid, eval_rrc, eval_sinc,
    pulse_inner_product, raised_cosine, rrc_spectrum,
)
from quadrature import fixed_rule, integrate, integrate_matrix


def test_sinc_values():
    assert eval_sinc(0.0, 0.5) == pytest.approx(1.0)
    assert eval_sinc(0.9, 0.5) == pytest.approx(math.sin(0.9 * math.pi) / (0.9 * math.pi), rel=1e-12)
    assert eval_sinc(0.9, 0.5) == pytest.approx(0.1092924, abs=1e-7)
    # amplitude sqrt(2W) keeps unit energy at other bandwidths
    assert eval_sinc(0.0, 2.0) == pytest.approx(2.0)


def test_rrc_peak():
    beta = 0.22
    assert eval_rrc(0.0, beta, 1.0) == pytest.approx(1 - beta + 4 * beta / math.pi, rel=1e-12)
    assert eval_rrc(0.0, beta, 1.0) == pytest.approx(1.0601127, abs=1e-7)


def test_rrc_without_rolloff_is_sinc():
    t = np.linspace(-5.3, 5.3, 41)
    np.testing.assert_allclose(eval_rrc(t, 0.0, 1.0), eval_sinc(t, 0.5), atol=1e-15)


@pytest.mark.parametrize("beta", [0.22, 0.5, 1.0])
def test_rrc_is_continuous_across_removable_singularity(beta):
    x0 = 1.0 / (4.0 * beta)
    inside = eval_rrc(np.array([x0 - 5e-5, x0 + 5e-5]), beta, 1.0)
    outside = eval_rrc(np.array([x0 - 1.5e-4, x0 + 1.5e-4]), beta, 1.0)
    assert np.all(np.isfinite(inside))
    np.testing.assert_allclose(inside, outside, atol=1e-3)


def test_rrc_is_even():
    t = np.linspace(0.01, 7.0, 50)
    np.testing.assert_allclose(eval_rrc(t, 0.22, 1.0), eval_rrc(-t, 0.22, 1.0), atol=1e-15)


@pytest.mark.parametrize("pulse", [PulseShape.sinc(0.5), PulseShape.rrc(0.22), PulseShape.rrc(0.5, 2.0)])
def test_spectrum_has_unit_energy(pulse):
    band = pulse.support_omega
    T, beta = pulse.symbol_time_T, pulse.rolloff_beta
    cuts = [-(1 - beta) * math.pi / T, (1 - beta) * math.pi / T]
    nodes, weights = fixed_rule(-band, band, band / 16, breakpoints=cuts)
    energy = np.sum(weights * np.asarray(pulse.spectrum(nodes)) ** 2) / (2 * math.pi)
    assert energy == pytest.approx(1.0, abs=1e-10)


def test_rrc_spectrum_vanishes_outside_band():
    omega = np.array([1.23 * math.pi, 3.0 * math.pi])
    np.testing.assert_array_equal(rrc_spectrum(omega, 0.22, 1.0), 0.0)


def test_rrc_unit_energy_by_quadrature():
    assert pulse_inner_product(PulseShape.rrc(0.22), 0.0, 0.0) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("k", [0, 1, 2, 5])
def test_autocorrelation_matches_quadrature_rrc(k):
    pulse = PulseShape.rrc(0.22)
    lag = 0.9 * k
    assert pulse.autocorrelation(lag) == pytest.approx(pulse_inner_product(pulse, 0.0, lag), abs=1e-8)


@pytest.mark.parametrize("k", [0, 1, 3])
def test_autocorrelation_matches_quadrature_sinc(k):
    pulse = PulseShape.sinc(0.5)
    lag = 0.81 * k
    assert pulse.autocorrelation(lag) == pytest.approx(pulse_inner_product(pulse, 0.0, lag), abs=1e-7)


def test_raised_cosine_limit_points():
    beta = 0.3
    x = 1.0 / (2.0 * beta)
    value = raised_cosine(x, beta)
    assert value == pytest.approx(math.pi / 4 * np.sinc(x), rel=1e-6)
    assert raised_cosine(0.0, beta) == pytest.approx(1.0)


def test_scaled_pulse_energy():
    pulse = PulseShape.rrc(0.22).scaled(math.sqrt(0.9))
    assert pulse.energy == pytest.approx(0.9)
    assert pulse.autocorrelation(0.0) == pytest.approx(0.9)
    assert pulse.kind is PulseKind.RRC


def test_windowed_inner_product_over_short_interval_is_small():
    value = pulse_inner_product(PulseShape.sinc(0.5), 0.0, 0.0, window=Interval(-1e-4, 1e-4))
    assert abs(value) < 3e-4


def test_shifted_pulse():
    target = ShiftedPulse(PulseShape.sinc(0.5), 6.0)
    assert target(6.0) == pytest.approx(1.0)
    assert abs(target.spectrum(0.0)) == pytest.approx(1.0)
    assert target.energy == pytest.approx(1.0)


def test_grid_from_nyquist():
    grid = TimeShiftGrid.from_nyquist(20, 0.81)
    assert grid.count_m == 24
    assert grid.shift_step == pytest.approx(0.81)
    assert grid.shifts[-1] == pytest.approx(0.81 * 23)
    assert TimeShiftGrid.from_nyquist(20, 1.0).count_m == 20


@pytest.mark.parametrize("make", [
    lambda: PulseShape.rrc(1.5),
    lambda: PulseShape.sinc(0.0),
    lambda: PulseShape(PulseKind.SINC, rolloff_beta=0.2),
    lambda: eval_sinc(float("nan"), 0.5),
    lambda: eval_rrc(0.0, 0.22, -1.0),
    lambda: Interval(1.0, 1.0),
    lambda: TimeShiftGrid(0.0, 4),
    lambda: TimeShiftGrid(0.5, 0),
])
def test_invalid_arguments(make):
    with pytest.raises(InvalidArgument):
        make()


def test_integrate_polynomial_reversed_and_failure():
    assert integrate(lambda t: t ** 3 - 2 * t, 0.0, 2.0, tol=1e-12).value == pytest.approx(0.0, abs=1e-12)
    assert integrate(np.cos, math.pi / 2, 0.0).value == pytest.approx(-1.0, abs=1e-12)
    assert integrate(np.cos, 1.0, 1.0).intervals == 0
    with pytest.raises(InvalidArgument):
        integrate(np.cos, 0.0, math.inf)
    with pytest.raises(NumericFailure):
        integrate(lambda t: t * np.sin(1e4 * t), 0.0, 50.0, tol=1e-12, limit=3)


def test_integrate_with_breakpoints_over_long_range():
    pulse = PulseShape.sinc(0.5)
    result = integrate(lambda t: pulse.time(t) ** 2, -200.0, 200.0, spacing=2.0, breakpoints=[0.0])
    # the tails beyond |t| = 200 carry 1/(pi^2 * 200) of the energy
    assert result.value == pytest.approx(1.0 - 1.0 / (math.pi ** 2 * 200.0), abs=1e-5)


def test_integrate_matrix_matches_scalar_entries():
    shifts = np.array([0.0, 0.9, 2.7])
    pulse = PulseShape.rrc(0.22)
    matrix = integrate_matrix(lambda t: np.outer(pulse.time(t - shifts), pulse.time(t - shifts)),
                              -30.0, 30.0, spacing=2.0)
    for k, l in ((0, 0), (0, 2), (1, 2)):
        scalar = integrate(lambda t: pulse.time(t - shifts[k]) * pulse.time(t - shifts[l]),
                           -30.0, 30.0, spacing=2.0).value
        assert matrix[k, l] == pytest.approx(scalar, abs=1e-9)

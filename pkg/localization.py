"""
FTN Toeplitz Toolkit — Time Localization
Energy of FTN signals inside and outside a time interval, the worst-case
outside-energy eigenproblem, least-squares approximation by FTN pulse trains
and the effective pulse of precoded transmission.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import sici

from config import LSTSQ_RCOND, PANEL_WIDTH_SYMBOLS, QUAD_BREAK_SYMBOLS, TRUNCATION_SYMBOLS
from errors import IllConditionedError, InvalidArgument
from pulse_models import Interval, PulseKind, PulseShape, ShiftedPulse, TimeShiftGrid
from quadrature import fixed_rule, integrate_matrix
from toeplitz_gramian import ToeplitzGramian, gramian_for_grid, gramian_for_shifts, inverse_sqrt_exact

logger = logging.getLogger(__name__)

__all__ = [
    "Interval", "LocalizationReport", "windowed_gramian", "outside_gramian",
    "concentration_ratio", "localization_report", "max_energy_outside",
    "outside_energy_sweep", "ftn_least_squares", "effective_pulse",
    "effective_pulse_distance", "reference_pulse", "synthesize",
]

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class LocalizationReport:
    interval: Interval
    concentration: float
    mu: float
    worst_case_outside: float                  # NaN when the generalized eigenproblem fails
    worst_case_signal: Optional[np.ndarray] = None


def _effective_pulse(grid: TimeShiftGrid, p: PulseShape, normalization: str) -> PulseShape:
    if normalization == "sqrt_rho":
        return p.scaled(math.sqrt(grid.rho))
    if normalization != "unit":
        raise InvalidArgument(f"normalization must be 'unit' or 'sqrt_rho', got {normalization!r}")
    return p


def synthesize(coeffs: np.ndarray, grid: TimeShiftGrid, p: PulseShape, t: np.ndarray,
               normalization: str = "unit") -> np.ndarray:
    """X(t) = sum_k A_k g(t - tau_k)."""
    pulse = _effective_pulse(grid, p, normalization)
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for a_k, tau in zip(coeffs, grid.shifts):
        if a_k != 0.0:
            out += a_k * pulse.time(t - tau)
    return out


# ═══════════════════════════════════════════════════════════════
# WINDOWED GRAMIANS
# ═══════════════════════════════════════════════════════════════

def _cin(x: np.ndarray) -> np.ndarray:
    """Cin(x) = int_0^x (1 - cos u)/u du, even in x."""
    ax = np.abs(x)
    small = ax < 1e-2
    safe = np.where(small, 1.0, ax)
    out = EULER_GAMMA + np.log(safe) - sici(safe)[1]
    series = ax ** 2 / 4 - ax ** 4 / 96 + ax ** 6 / 4320
    return np.where(small, series, out)


def _si(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * sici(np.abs(x))[0]


def _sinc_window(s: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """
    int_lo^hi sinc(t - s_k) sinc(t - s_l) dt in symbol-time units, through sine
    and cosine integrals. Either limit may be infinite.
    """
    a = s[:, None]
    b = s[None, :]
    d = a - b
    cos_d, sin_d = np.cos(math.pi * d), np.sin(math.pi * d)

    def antiderivative(t: float) -> np.ndarray:
        if t == math.inf:
            return np.broadcast_to(sin_d * math.pi / 2, d.shape)
        if t == -math.inf:
            return np.broadcast_to(-sin_d * math.pi / 2, d.shape)
        x = 2 * math.pi * (t - a)
        y = 2 * math.pi * (t - b)
        return 0.5 * cos_d * (_cin(x) - _cin(y)) + 0.5 * sin_d * (_si(x) + _si(y))

    def diagonal(t: float) -> np.ndarray:
        if math.isinf(t):
            return np.full(len(s), math.copysign(0.5, t))
        u = t - s
        safe = np.where(u == 0.0, 1.0, u)
        tail = np.where(u == 0.0, 0.0, np.sin(math.pi * u) ** 2 / safe)
        return (math.pi * _si(2 * math.pi * u) - tail) / math.pi ** 2

    off_diag = d != 0.0
    matrix = np.zeros(d.shape)
    np.divide(antiderivative(hi) - antiderivative(lo), math.pi ** 2 * d, out=matrix, where=off_diag)
    matrix[np.diag_indices_from(matrix)] = diagonal(hi) - diagonal(lo)
    return 0.5 * (matrix + matrix.T)


def _quadrature_window(pulse: PulseShape, shifts: np.ndarray, lo: float, hi: float) -> np.ndarray:
    T = pulse.symbol_time_T
    reach = TRUNCATION_SYMBOLS * T
    a = max(lo, shifts.min() - reach)
    b = min(hi, shifts.max() + reach)
    if b <= a:
        return np.zeros((len(shifts), len(shifts)))

    def products(t: float) -> np.ndarray:
        samples = pulse.time(t - shifts)
        return np.outer(samples, samples)

    matrix = integrate_matrix(products, a, b, spacing=QUAD_BREAK_SYMBOLS * T)
    return 0.5 * (matrix + matrix.T)


def _window(grid: TimeShiftGrid, pulse: PulseShape, lo: float, hi: float) -> np.ndarray:
    if pulse.kind is PulseKind.SINC:
        T = pulse.symbol_time_T
        return pulse.energy * _sinc_window(grid.shifts / T, lo / T, hi / T)
    return _quadrature_window(pulse, grid.shifts, lo, hi)


def windowed_gramian(grid: TimeShiftGrid, p: PulseShape, omega: Interval,
                     normalization: str = "unit") -> np.ndarray:
    """H(Omega)_kl = int_Omega h_k h_l dt."""
    pulse = _effective_pulse(grid, p, normalization)
    return _window(grid, pulse, omega.a, omega.b)


def outside_gramian(grid: TimeShiftGrid, p: PulseShape, omega: Interval,
                    normalization: str = "unit") -> np.ndarray:
    """H - H(Omega), assembled from the two half-line windows."""
    pulse = _effective_pulse(grid, p, normalization)
    matrix = np.zeros((grid.count_m, grid.count_m))
    if omega.a > -math.inf:
        matrix += _window(grid, pulse, -math.inf, omega.a)
    if omega.b < math.inf:
        matrix += _window(grid, pulse, omega.b, math.inf)
    return matrix


# ═══════════════════════════════════════════════════════════════
# CONCENTRATION
# ═══════════════════════════════════════════════════════════════

def _signal_energy(coeffs: np.ndarray, grid: TimeShiftGrid, H: ToeplitzGramian) -> float:
    if coeffs.shape != (grid.count_m,):
        raise InvalidArgument(f"Expected {grid.count_m} coefficients, got shape {coeffs.shape}")
    if not np.any(coeffs):
        raise InvalidArgument("Concentration of the zero signal is undefined")
    total = H.quadratic_form(coeffs)
    if total <= 0.0:
        raise InvalidArgument(f"Signal energy {total:.3e} is not positive")
    return total


def concentration_ratio(coeffs: np.ndarray, grid: TimeShiftGrid, p: PulseShape, omega: Interval,
                        normalization: str = "unit") -> float:
    """int_Omega X(t)^2 dt / ||X||^2 as the ratio A^T H(Omega) A / A^T H A."""
    coeffs = np.asarray(coeffs, dtype=float)
    H = gramian_for_grid(grid, p, normalization)
    total = _signal_energy(coeffs, grid, H)
    outside = float(coeffs @ outside_gramian(grid, p, omega, normalization) @ coeffs)
    return float(np.clip(1.0 - outside / total, 0.0, 1.0))


def max_energy_outside(H: Union[ToeplitzGramian, np.ndarray], H_omega: Optional[np.ndarray] = None,
                       outside: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """
    Largest lambda of (H - H(Omega)) v = lambda H v and its H-normalized v.

    Pass `outside` (H - H(Omega) computed directly) instead of `H_omega` to
    avoid the cancellation in the difference.
    """
    full = H.dense() if isinstance(H, ToeplitzGramian) else np.asarray(H, dtype=float)
    if outside is None:
        if H_omega is None:
            raise InvalidArgument("max_energy_outside needs H_omega or outside")
        outside = full - np.asarray(H_omega, dtype=float)
    outside = 0.5 * (outside + outside.T)
    full = 0.5 * (full + full.T)
    m = full.shape[0]
    try:
        values, vectors = scipy.linalg.eigh(outside, full, subset_by_index=[m - 1, m - 1])
    except np.linalg.LinAlgError as e:
        lam_min = float(np.linalg.eigvalsh(full)[0])
        raise IllConditionedError(f"Gramian is not positive definite ({e})", lam_min) from e
    lam = float(np.clip(values[-1], 0.0, 1.0))
    return lam, vectors[:, -1]


def localization_report(coeffs: np.ndarray, grid: TimeShiftGrid, p: PulseShape, omega: Interval,
                        normalization: str = "unit") -> LocalizationReport:
    coeffs = np.asarray(coeffs, dtype=float)
    H = gramian_for_grid(grid, p, normalization)
    total = _signal_energy(coeffs, grid, H)
    outside = outside_gramian(grid, p, omega, normalization)
    concentration = float(np.clip(1.0 - float(coeffs @ outside @ coeffs) / total, 0.0, 1.0))
    try:
        worst, signal = max_energy_outside(H, outside=outside)
    except IllConditionedError as e:
        logger.warning(f"Worst-case outside energy unavailable for {grid.count_m} pulses at "
                       f"rho={grid.rho:g}: {e}")
        worst, signal = math.nan, None
    return LocalizationReport(interval=omega, concentration=concentration, mu=1.0 - concentration,
                              worst_case_outside=worst, worst_case_signal=signal)


def outside_energy_sweep(grid: TimeShiftGrid, p: PulseShape, n: int, m_values: Sequence[int],
                         normalization: str = "unit") -> List[Tuple[int, float]]:
    """lambda_max outside Omega_m = [-m T, (m + n - 1) T] for each margin m."""
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    margins = list(m_values)
    if any(m < 0 for m in margins) or margins != sorted(margins):
        raise InvalidArgument("m_values must be non-negative and increasing")
    T = p.symbol_time_T
    H = gramian_for_grid(grid, p, normalization)
    results = []
    for m in margins:
        omega = Interval(-m * T, (m + n - 1) * T)
        lam, _ = max_energy_outside(H, outside=outside_gramian(grid, p, omega, normalization))
        results.append((m, lam))
    for (m0, l0), (m1, l1) in zip(results, results[1:]):
        if l1 > l0 + 1e-9:
            logger.warning(f"Outside energy rose from {l0:.6g} (m={m0}) to {l1:.6g} (m={m1})")
    logger.info(f"rho={grid.rho:g}: outside-energy sweep over {len(margins)} margins done")
    return results


# ═══════════════════════════════════════════════════════════════
# LEAST-SQUARES APPROXIMATION
# ═══════════════════════════════════════════════════════════════

def _spectral_factor(pulse: PulseShape, shifts: np.ndarray, target: ShiftedPulse) -> Tuple[np.ndarray, np.ndarray]:
    """
    Real factor F with F^T F = H and the matching target vector, from
    Parseval on the band: <f, g> = (1/2pi) int F(w) conj(G(w)) dw.
    """
    band = max(pulse.support_omega, target.pulse.support_omega)
    reach = float(np.max(np.abs(np.append(shifts, target.delay))))
    panels = 8 + int(math.ceil(2.0 * reach * band / math.pi))
    cuts = set()
    for q in (pulse, target.pulse):
        T, beta = q.symbol_time_T, q.rolloff_beta
        for edge in ((1 - beta) * math.pi / T, (1 + beta) * math.pi / T):
            cuts.update((-edge, edge))
    nodes, weights = fixed_rule(-band, band, 2 * band / panels, breakpoints=sorted(cuts))
    scale = np.sqrt(weights / (2 * math.pi))

    basis = pulse.spectrum(nodes)[:, None] * np.exp(-1j * np.outer(nodes, shifts)) * scale[:, None]
    wanted = target.spectrum(nodes) * scale
    factor = np.vstack([basis.real, basis.imag])
    rhs = np.concatenate([wanted.real, wanted.imag])
    return factor, rhs


def ftn_least_squares(target: Union[ShiftedPulse, Callable[[np.ndarray], np.ndarray]],
                      grid: TimeShiftGrid, p: PulseShape, normalization: str = "unit",
                      strict: bool = False, rcond: float = LSTSQ_RCOND) -> Tuple[np.ndarray, float]:
    """
    Best L2 approximation of `target` by sum_k A_k h_k; returns (A, residual L2 error).

    Targets with a known spectrum (ShiftedPulse) are fitted on the spectral
    factor of H by SVD least squares. Other callables go through the normal
    equations H A = b, with b by quadrature and the solve restricted to
    eigenvalues above rcond * lambda_max. Truncated modes raise
    IllConditionedError when strict is set.
    """
    pulse = _effective_pulse(grid, p, normalization)
    shifts = grid.shifts
    m = grid.count_m

    if isinstance(target, ShiftedPulse):
        factor, rhs = _spectral_factor(pulse, shifts, target)
        coeffs, _, rank, singular = np.linalg.lstsq(factor, rhs, rcond=rcond)
        if rank < m:
            message = f"Least squares kept {rank} of {m} modes (rho={grid.rho:g})"
            if strict:
                raise IllConditionedError(message, float(singular[-1] ** 2))
            logger.warning(message)
        residual_sq = float(np.sum((factor @ coeffs - rhs) ** 2))
        target_energy = target.energy
    else:
        T = pulse.symbol_time_T
        reach = TRUNCATION_SYMBOLS * T
        nodes, weights = fixed_rule(shifts.min() - reach, shifts.max() + reach, PANEL_WIDTH_SYMBOLS * T)
        values = np.asarray(target(nodes), dtype=float)
        b = np.array([np.sum(weights * values * pulse.time(nodes - tau)) for tau in shifts])
        target_energy = float(np.sum(weights * values ** 2))

        lam, vectors = gramian_for_shifts(pulse, grid.shift_step, m).spectrum
        keep = lam > rcond * lam[-1]
        if not keep.all():
            message = f"Least squares kept {int(keep.sum())} of {m} modes (rho={grid.rho:g})"
            if strict:
                raise IllConditionedError(message, float(lam[0]))
            logger.warning(message)
        v = vectors[:, keep]
        coeffs = v @ ((v.T @ b) / lam[keep])
        residual_sq = target_energy - float(b @ coeffs)

    if residual_sq < -1e-9:
        logger.warning(f"Negative squared residual {residual_sq:.3e}; tolerance exceeded")
    residual = math.sqrt(max(residual_sq, 0.0))
    logger.info(f"rho={grid.rho:g}, m={m}: L2 residual {residual:.6g} "
                f"(relative {residual / math.sqrt(target_energy):.6g})")
    return coeffs, residual


# ═══════════════════════════════════════════════════════════════
# EFFECTIVE PULSE OF PRECODED TRANSMISSION
# ═══════════════════════════════════════════════════════════════

@lru_cache(maxsize=16)
def _precoder_row(n: int, ell: int, p: PulseShape, Tprime: float) -> np.ndarray:
    """Row ell of H^(-1/2) for pulses at k T', k = -n..n."""
    if n < 0:
        raise InvalidArgument(f"n must be >= 0, got {n}")
    if abs(ell) > n:
        raise InvalidArgument(f"|ell| = {abs(ell)} exceeds half-width n = {n}")
    H = gramian_for_shifts(p, Tprime, 2 * n + 1)
    K = inverse_sqrt_exact(H)
    row = K.apply(np.eye(2 * n + 1)[ell + n])
    row.setflags(write=False)
    return row


def effective_pulse(n: int, ell: int, p: PulseShape, Tprime: float, t_samples: np.ndarray) -> np.ndarray:
    """xi_ell(t) = sum_k [H^(-1/2)]_(ell, k) g(t - k T'), k = -n..n."""
    row = _precoder_row(n, ell, p, Tprime)
    t = np.asarray(t_samples, dtype=float)
    waveform = np.zeros_like(t)
    for k, weight in zip(range(-n, n + 1), row):
        waveform += weight * p.time(t - k * Tprime)
    return waveform


def reference_pulse(ell: int, Tprime: float, t: np.ndarray) -> np.ndarray:
    """Unit-energy sinc of bandwidth W' = 1/(2T') delayed by ell T'."""
    t = np.asarray(t, dtype=float)
    return np.sinc((t - ell * Tprime) / Tprime) / math.sqrt(Tprime)


def effective_pulse_distance(n: int, ell: int, p: PulseShape, Tprime: float) -> float:
    """
    ||xi_ell - r||_2 with r the reference pulse. Uses ||xi|| = ||r|| = 1 and
    <g_k, r> = (sqrt(T')/2pi) int G(w) cos(w (ell - k) T') dw over |w| <= pi/T'.
    """
    row = _precoder_row(n, ell, p, Tprime)
    band = min(math.pi / Tprime, p.support_omega)
    T, beta = p.symbol_time_T, p.rolloff_beta
    cuts = [e for e in ((1 - beta) * math.pi / T, (1 + beta) * math.pi / T) if e < band]
    cuts = sorted(set(cuts + [-e for e in cuts]))
    width = min(band / 8, 2 * math.pi / (Tprime * (abs(ell) + n + 1)))
    nodes, weights = fixed_rule(-band, band, width, breakpoints=cuts)

    lags = ell - np.arange(-n, n + 1)
    spectrum = np.asarray(p.spectrum(nodes))
    overlaps = math.sqrt(Tprime) / (2 * math.pi) * (np.cos(np.outer(lags * Tprime, nodes)) @ (weights * spectrum))
    inner = float(row @ overlaps)
    return math.sqrt(max(2.0 - 2.0 * inner, 0.0))

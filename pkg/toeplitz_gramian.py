"""
FTN Toeplitz Toolkit — Toeplitz Gramian
Gram matrices of uniformly shifted pulses stored by their first row, the
associated function (folded pulse power spectrum) of each family, eigenvalue
diagnostics and the exact and circulant realizations of H^(-1/2).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from config import (
    CONDITIONING_FACTOR, DEFAULT_BANDWIDTH_W, DENSE_EIGEN_MAX_ORDER, PSD_SLACK,
    SYMBOL_MIN_PANELS,
)
from errors import IllConditionedError, InvalidArgument, NumericFailure
from pulse_models import PulseKind, PulseShape, TimeShiftGrid
from quadrature import fixed_rule

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class PrecodingMode(str, Enum):
    EXACT = "exact"
    CIRCULANT = "circulant"


def _check_rho(rho: float):
    if not (math.isfinite(rho) and 0.0 < rho <= 1.0):
        raise InvalidArgument(f"rho must lie in (0, 1], got {rho}")


def _check_beta(beta: float):
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise InvalidArgument(f"beta must lie in [0, 1], got {beta}")


def _check_z(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("z must be finite")
    if np.any(np.abs(arr) > math.pi * (1.0 + 1e-12)):
        raise InvalidArgument("z must lie in [-pi, pi]")
    return arr


def _check_normalization(normalization: str):
    if normalization not in ("unit", "sqrt_rho"):
        raise InvalidArgument(f"normalization must be 'unit' or 'sqrt_rho', got {normalization!r}")


# ═══════════════════════════════════════════════════════════════
# ASSOCIATED FUNCTIONS (SYMBOLS)
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AssociatedFunction:
    """
    Even, non-negative 2pi-periodic symbol evaluated on [-pi, pi].

    `breakpoints` lists the points where the closed form switches branch;
    quadrature over the symbol splits panels there.
    """
    evaluator: Callable[[np.ndarray], np.ndarray]
    inf_f: float
    sup_f: float
    breakpoints: Tuple[float, ...] = ()
    label: str = ""

    def __call__(self, z):
        arr = _check_z(z)
        values = np.asarray(self.evaluator(arr), dtype=float)
        return float(values) if np.ndim(z) == 0 else values

    def scaled(self, factor: float) -> "AssociatedFunction":
        evaluator = self.evaluator
        return AssociatedFunction(lambda z: factor * evaluator(z), factor * self.inf_f,
                                  factor * self.sup_f, self.breakpoints, self.label)

    def sample(self, points: int) -> Tuple[np.ndarray, np.ndarray]:
        """Half-open grid z = 2 pi l / points - pi."""
        z = TWO_PI * np.arange(points) / points - math.pi
        return z, self(z)


def sinc_associated_function(rho: float, z) -> np.ndarray:
    """f(z) = (1/rho) 1{|z| <= rho pi} for unit-energy sinc pulses at spacing rho T."""
    _check_rho(rho)
    arr = _check_z(z)
    return np.where(np.abs(arr) <= rho * math.pi, 1.0 / rho, 0.0)


def _rrc_branches(rho: float, beta: float, z: np.ndarray) -> np.ndarray:
    """RRC symbol for sqrt(rho)-scaled pulses; takes values in [0, 1]."""
    u = np.abs(z)
    flat = (1.0 - beta) * rho * math.pi
    if beta == 0.0:
        return np.where(u <= rho * math.pi, 1.0, 0.0)
    rolloff = 0.5 * (1.0 - np.sin((u - rho * math.pi) / (2.0 * beta * rho)))
    if (1.0 + beta) * rho <= 1.0:
        stop = (1.0 + beta) * rho * math.pi
        return np.where(u <= flat, 1.0, np.where(u <= stop, rolloff, 0.0))
    # neighbouring aliases overlap near |z| = pi
    knee = (2.0 - (1.0 + beta) * rho) * math.pi
    depth = math.sin(math.pi * (1.0 - rho) / (2.0 * beta * rho))
    folded = 1.0 - depth * np.cos((u - math.pi) / (2.0 * beta * rho))
    return np.where(u <= flat, 1.0, np.where(u <= knee, rolloff, folded))


def rrc_associated_function(rho: float, beta: float, z,
                            normalization: str = "sqrt_rho") -> np.ndarray:
    """
    Piecewise symbol of the RRC Gramian. Branch set switches at (1+beta) rho = 1;
    with the unit-energy convention the values are divided by rho.
    """
    _check_rho(rho)
    _check_beta(beta)
    _check_normalization(normalization)
    values = _rrc_branches(rho, beta, _check_z(z))
    return values / rho if normalization == "unit" else values


def sinc_symbol(rho: float) -> AssociatedFunction:
    _check_rho(rho)
    return AssociatedFunction(
        evaluator=lambda z: np.where(np.abs(z) <= rho * math.pi, 1.0 / rho, 0.0),
        inf_f=1.0 if rho == 1.0 else 0.0,
        sup_f=1.0 / rho,
        breakpoints=() if rho == 1.0 else (-rho * math.pi, rho * math.pi),
        label=f"sinc(rho={rho:g})",
    )


def rrc_symbol(rho: float, beta: float, normalization: str = "sqrt_rho") -> AssociatedFunction:
    _check_rho(rho)
    _check_beta(beta)
    _check_normalization(normalization)
    if beta == 0.0:
        symbol = sinc_symbol(rho)
        return symbol.scaled(rho) if normalization == "sqrt_rho" else symbol

    if (1.0 + beta) * rho <= 1.0:
        inf_f = 0.0
        edges = ((1.0 - beta) * rho * math.pi, (1.0 + beta) * rho * math.pi)
    else:
        inf_f = 1.0 - math.sin(math.pi * (1.0 - rho) / (2.0 * beta * rho))
        edges = ((1.0 - beta) * rho * math.pi, (2.0 - (1.0 + beta) * rho) * math.pi)
    edges = tuple(e for e in edges if e < math.pi)
    breakpoints = tuple(sorted({-e for e in edges} | set(edges)))

    scale = 1.0 / rho if normalization == "unit" else 1.0
    return AssociatedFunction(
        evaluator=lambda z: scale * _rrc_branches(rho, beta, z),
        inf_f=scale * inf_f,
        sup_f=scale,
        breakpoints=breakpoints,
        label=f"rrc(rho={rho:g}, beta={beta:g}, {normalization})",
    )


def folded_spectrum(p: PulseShape, tau: float, z) -> np.ndarray:
    """
    (1/tau) sum_l |G((z + 2 pi l)/tau)|^2 over exactly the aliases that fall in
    the band. The band is taken half-open so the alias pair at |z| = pi of a
    boundary-limited spectrum is counted once.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidArgument(f"tau must be positive, got {tau}")
    arr = _check_z(z)
    band = p.support_omega
    reach = int(math.ceil((tau * band + math.pi) / TWO_PI))
    total = np.zeros_like(arr, dtype=float)
    for ell in range(-reach, reach + 1):
        omega = (arr + TWO_PI * ell) / tau
        inside = (omega >= -band) & (omega < band)
        if not np.any(inside):
            continue
        total = total + np.where(inside, np.asarray(p.spectrum(omega)) ** 2, 0.0)
    result = total / tau
    return float(result) if np.ndim(z) == 0 else result


def symbol_fourier_coefficients(symbol: Union[AssociatedFunction, Callable[[np.ndarray], np.ndarray]],
                                count: int,
                                breakpoints: Optional[Iterable[float]] = None) -> np.ndarray:
    """
    c_k = (1/2pi) int f(z) cos(kz) dz for k = 0..count-1 (f even).

    Composite Gauss-Legendre with at most one oscillation of cos(kz) per panel;
    panels are split at the symbol breakpoints so jumps and kinks cost nothing.
    """
    if count < 1:
        raise InvalidArgument(f"count must be >= 1, got {count}")
    if breakpoints is None:
        breakpoints = getattr(symbol, "breakpoints", ())
    width = min(TWO_PI / SYMBOL_MIN_PANELS, TWO_PI / count)
    nodes, weights = fixed_rule(-math.pi, math.pi, width, breakpoints=breakpoints)
    weighted = np.asarray(symbol(nodes), dtype=float) * weights / TWO_PI

    coeffs = np.empty(count)
    chunk = 64
    for start in range(0, count, chunk):
        k = np.arange(start, min(start + chunk, count))
        coeffs[start:start + len(k)] = np.cos(np.outer(k, nodes)) @ weighted
    return coeffs


# ═══════════════════════════════════════════════════════════════
# GRAMIAN
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class ToeplitzGramian:
    """
    Symmetric Toeplitz Gram matrix [H]_kl = c_|k-l| of shifted pulses.

    The dense eigendecomposition and the symmetric square root are computed on
    first use and cached; the object is read-only afterwards.
    """
    coefficients: np.ndarray
    symbol: Optional[AssociatedFunction] = None
    rho: Optional[float] = None
    beta: Optional[float] = None
    normalization: str = "unit"

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InvalidArgument("coefficients must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def order_n(self) -> int:
        return len(self.coefficients)

    def __len__(self) -> int:
        return self.order_n

    def dense(self) -> np.ndarray:
        if self.order_n > DENSE_EIGEN_MAX_ORDER:
            raise InvalidArgument(
                f"Dense path limited to n <= {DENSE_EIGEN_MAX_ORDER}, got n = {self.order_n}; "
                f"use the circulant precoder")
        return scipy.linalg.toeplitz(self.coefficients)

    @cached_property
    def spectrum(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and orthonormal eigenvectors of the dense matrix."""
        matrix = self.dense()
        matrix = 0.5 * (matrix + matrix.T)
        try:
            values, vectors = scipy.linalg.eigh(matrix)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericFailure(f"Eigendecomposition of the order-{self.order_n} Gramian failed: {e}") from e
        return values, vectors

    @cached_property
    def sqrt_matrix(self) -> np.ndarray:
        """H^(1/2); eigenvalues below zero from rounding are clipped."""
        values, vectors = self.spectrum
        return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T

    @cached_property
    def _embedding_fft(self) -> np.ndarray:
        n = self.order_n
        extended = np.zeros(2 * n)
        extended[:n] = self.coefficients
        extended[n + 1:] = self.coefficients[1:][::-1]
        return np.fft.fft(extended)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """H x through a circulant embedding of twice the size; x may hold vectors as columns."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.order_n:
            raise InvalidArgument(f"Vector length {x.shape[0]} does not match order {self.order_n}")
        kernel = self._embedding_fft if x.ndim == 1 else self._embedding_fft[:, None]
        product = np.fft.ifft(kernel * np.fft.fft(x, n=2 * self.order_n, axis=0), axis=0)
        return product[:self.order_n].real

    def quadratic_form(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=float)
        return float(a @ self.matvec(a))

    def default_tolerance(self) -> float:
        """min_lambda_tol = CONDITIONING_FACTOR * sup f (largest eigenvalue without a symbol)."""
        scale = self.symbol.sup_f if self.symbol is not None else float(self.spectrum[0][-1])
        return CONDITIONING_FACTOR * max(scale, 0.0)


def gramian_for_shifts(pulse: PulseShape, step: float, count: int,
                       normalization: str = "unit") -> ToeplitzGramian:
    """
    Gramian of `count` copies of `pulse` spaced `step` apart, c_k = <g, g(. - k step)>.

    With normalization "sqrt_rho" every pulse is scaled by sqrt(step / T).
    """
    _check_normalization(normalization)
    if count < 1:
        raise InvalidArgument(f"count must be >= 1, got {count}")
    T = pulse.symbol_time_T
    if not (math.isfinite(step) and 0.0 < step <= T * (1.0 + 1e-12)):
        raise InvalidArgument(f"step must lie in (0, T] = (0, {T:g}], got {step}")
    rho = min(step / T, 1.0)
    if normalization == "sqrt_rho":
        pulse = pulse.scaled(math.sqrt(rho))

    coefficients = np.asarray(pulse.autocorrelation(step * np.arange(count)), dtype=float)
    if pulse.kind is PulseKind.SINC:
        base = sinc_symbol(rho)
    else:
        base = rrc_symbol(rho, pulse.rolloff_beta, normalization="unit")
    gramian = ToeplitzGramian(coefficients, symbol=base.scaled(pulse.energy), rho=rho,
                              beta=pulse.rolloff_beta, normalization=normalization)
    logger.debug(f"Gramian n={count} for {pulse.describe()} at step {step:.6g}")
    return gramian


def gramian_for_grid(grid: TimeShiftGrid, pulse: PulseShape,
                     normalization: str = "unit") -> ToeplitzGramian:
    if abs(grid.symbol_time_T - pulse.symbol_time_T) > 1e-12 * pulse.symbol_time_T:
        raise InvalidArgument("grid and pulse disagree on the symbol time T")
    return gramian_for_shifts(pulse, grid.shift_step, grid.count_m, normalization)


def build_sinc_gramian(rho: float, m: int, W: float = DEFAULT_BANDWIDTH_W,
                       normalization: str = "unit") -> ToeplitzGramian:
    """c_k = sinc(rho k); symbol (1/rho) 1{|z| <= rho pi}."""
    _check_rho(rho)
    pulse = PulseShape.sinc(W)
    return gramian_for_shifts(pulse, rho * pulse.symbol_time_T, m, normalization)


def build_rrc_gramian(rho: float, beta: float, n: int, T: float = 1.0,
                      normalization: str = "sqrt_rho") -> ToeplitzGramian:
    """c_k = rho sinc(rho k) cos(pi beta rho k) / (1 - 4 beta^2 rho^2 k^2) for sqrt(rho)-scaled pulses."""
    _check_rho(rho)
    _check_beta(beta)
    return gramian_for_shifts(PulseShape.rrc(beta, T), rho * T, n, normalization)


# ═══════════════════════════════════════════════════════════════
# EIGEN DIAGNOSTICS
# ═══════════════════════════════════════════════════════════════

def eigenvalues(H: ToeplitzGramian) -> np.ndarray:
    values = H.spectrum[0].copy()
    if H.symbol is not None:
        low, high = H.symbol.inf_f - PSD_SLACK, H.symbol.sup_f + PSD_SLACK
        outside = int(np.sum((values < low) | (values > high)))
        if outside:
            logger.warning(f"{outside} eigenvalues outside the symbol range "
                           f"[{H.symbol.inf_f:.6g}, {H.symbol.sup_f:.6g}]")
    return values


def szego_distribution_gap(H: ToeplitzGramian, F: Callable[[np.ndarray], np.ndarray]) -> float:
    """(1/n) sum [F(lambda_l) - F(f(2 pi l / n - pi))]; F is applied to whole arrays."""
    if H.symbol is None:
        raise InvalidArgument("szego_distribution_gap needs a Gramian with an attached symbol")
    n = H.order_n
    _, samples = H.symbol.sample(n)
    lam = eigenvalues(H)
    return float(np.mean(np.asarray(F(lam), dtype=float)) - np.mean(np.asarray(F(samples), dtype=float)))


def eigen_summary(H: ToeplitzGramian) -> Dict[str, float]:
    values = eigenvalues(H)
    summary = {
        "n": H.order_n,
        "lambda_min": float(values[0]),
        "lambda_max": float(values[-1]),
        "trace_mean": float(values.mean()),
        "c0": float(H.coefficients[0]),
        "inf_f": float("nan"),
        "sup_f": float("nan"),
        "within_symbol_range": True,
    }
    if H.symbol is not None:
        summary["inf_f"] = H.symbol.inf_f
        summary["sup_f"] = H.symbol.sup_f
        summary["within_symbol_range"] = bool(
            values[0] >= H.symbol.inf_f - PSD_SLACK and values[-1] <= H.symbol.sup_f + PSD_SLACK)
    return summary


# ═══════════════════════════════════════════════════════════════
# H^(-1/2): EXACT AND CIRCULANT
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class PrecodingOperator:
    """
    K ~ H^(-1/2). For EXACT, spectral_data holds lambda^(-1/2) and basis the
    eigenvectors; for CIRCULANT it holds the DFT-domain multipliers in natural
    FFT order.
    """
    mode: PrecodingMode
    order_n: int
    spectral_data: np.ndarray
    min_eigenvalue: float
    basis: Optional[np.ndarray] = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[0] != self.order_n:
            raise InvalidArgument(f"Expected {self.order_n} rows, got shape {x.shape}")
        scales = self.spectral_data if x.ndim == 1 else self.spectral_data[:, None]
        if self.mode is PrecodingMode.EXACT:
            return self.basis @ (scales * (self.basis.T @ x))
        return np.fft.ifft(np.fft.fft(x, axis=0) * scales, axis=0).real

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.order_n))


def inverse_sqrt_exact(H: ToeplitzGramian, min_lambda_tol: Optional[float] = None) -> PrecodingOperator:
    """H^(-1/2) from the symmetric eigendecomposition."""
    if min_lambda_tol is None:
        min_lambda_tol = H.default_tolerance()
    values, vectors = H.spectrum
    lam_min = float(values[0])
    if lam_min < min_lambda_tol:
        raise IllConditionedError(
            f"Gramian of order {H.order_n} has lambda_min = {lam_min:.3e} below tolerance {min_lambda_tol:.3e}",
            lam_min, rho=H.rho, beta=H.beta)
    logger.debug(f"Exact H^(-1/2): n={H.order_n}, lambda_min={lam_min:.4e}")
    return PrecodingOperator(PrecodingMode.EXACT, H.order_n, 1.0 / np.sqrt(values), lam_min, basis=vectors)


def inverse_sqrt_circulant(H: ToeplitzGramian, n: Optional[int] = None,
                           multipliers: str = "symbol") -> PrecodingOperator:
    """
    Circulant approximation of H^(-1/2) applied by FFT.

    multipliers="symbol" samples 1/sqrt(f) at the DFT frequencies, which for
    even n are the half-open grid 2 pi l / n - pi; "coefficients" uses the
    Strang circulant built from the first row instead.
    """
    n = H.order_n if n is None else n
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")

    if multipliers == "symbol":
        symbol = H.symbol
        if symbol is None:
            raise InvalidArgument("Symbol-sampled circulant needs an attached symbol")
        if symbol.inf_f <= CONDITIONING_FACTOR * symbol.sup_f:
            raise IllConditionedError(
                f"Symbol {symbol.label} vanishes (inf f = {symbol.inf_f:.3e}); "
                f"the circulant precoder is undefined, use the exact precoder",
                symbol.inf_f, rho=H.rho, beta=H.beta)
        samples = symbol(TWO_PI * np.fft.fftfreq(n))
    elif multipliers == "coefficients":
        if n > H.order_n:
            raise InvalidArgument(f"Strang circulant of order {n} needs at least {n} coefficients")
        row = H.coefficients[:n]
        column = np.array([row[j] if j <= n // 2 else row[n - j] for j in range(n)])
        samples = np.fft.fft(column).real
        if samples.min() <= CONDITIONING_FACTOR * samples.max():
            raise IllConditionedError(
                f"Strang circulant of order {n} has eigenvalue {samples.min():.3e}",
                float(samples.min()), rho=H.rho, beta=H.beta)
    else:
        raise InvalidArgument(f"multipliers must be 'symbol' or 'coefficients', got {multipliers!r}")

    return PrecodingOperator(PrecodingMode.CIRCULANT, n, 1.0 / np.sqrt(samples), float(samples.min()))


def apply(op: PrecodingOperator, x: np.ndarray) -> np.ndarray:
    return op.apply(x)


def sqrt_inverse_toeplitz_deviation(H: ToeplitzGramian) -> float:
    """
    (1/n) Tr(D^T D) with D = H^(-1/2) - T_n(1/sqrt(f)), the distance of the exact
    inverse square root from the Toeplitz matrix generated by f^(-1/2).
    """
    symbol = H.symbol
    if symbol is None:
        raise InvalidArgument("Deviation measure needs an attached symbol")
    if symbol.inf_f <= CONDITIONING_FACTOR * symbol.sup_f:
        raise IllConditionedError(f"1/sqrt(f) is unbounded for {symbol.label}", symbol.inf_f,
                                  rho=H.rho, beta=H.beta)
    n = H.order_n
    exact = inverse_sqrt_exact(H).dense()
    generated = symbol_fourier_coefficients(lambda z: 1.0 / np.sqrt(symbol(z)), n,
                                            breakpoints=symbol.breakpoints)
    deviation = exact - scipy.linalg.toeplitz(generated)
    return float(np.sum(deviation * deviation) / n)

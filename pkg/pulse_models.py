"""
FTN Toeplitz Toolkit — Pulse Models
Sinc and root-raised-cosine pulse families: exact time and frequency
evaluation, closed-form autocorrelation, and a quadrature inner product used
as the oracle for every closed form elsewhere in the toolkit.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np

from config import (
    DEFAULT_BANDWIDTH_W, QUAD_ABS_TOL, QUAD_BREAK_SYMBOLS, TAYLOR_RADIUS,
    TRUNCATION_SYMBOLS,
)
from errors import InvalidArgument
from quadrature import integrate

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class PulseKind(str, Enum):
    SINC = "sinc"
    RRC = "rrc"


def _finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} must be finite")
    return arr


def _like_input(result: np.ndarray, original) -> ArrayLike:
    return float(result) if np.ndim(original) == 0 else result


# ═══════════════════════════════════════════════════════════════
# TIME DOMAIN
# ═══════════════════════════════════════════════════════════════

def eval_sinc(t: ArrayLike, W: float) -> ArrayLike:
    """g(t) = sqrt(2W) sinc(2Wt); np.sinc returns the exact limit 1 at t = 0."""
    if not (math.isfinite(W) and W > 0):
        raise InvalidArgument(f"W must be positive and finite, got {W}")
    arr = _finite("t", t)
    return _like_input(math.sqrt(2.0 * W) * np.sinc(2.0 * W * arr), t)


def _rrc_pole_series(x: np.ndarray, beta: float) -> np.ndarray:
    """
    Fourth-order expansion of the bracketed RRC ratio around |t|/T = 1/(4 beta),
    where numerator and denominator vanish together.
    """
    x0 = 1.0 / (4.0 * beta)
    a = (1.0 + beta) * math.pi
    b = (1.0 - beta) * math.pi
    derivs = []
    for n in range(1, 5):
        value = a ** n * math.cos(a * x0 + n * math.pi / 2)
        # Leibniz rule on sin(b x) * x^-1
        inner = 0.0
        for k in range(n + 1):
            j = n - k
            inner += (math.comb(n, k) * b ** k * math.sin(b * x0 + k * math.pi / 2)
                      * (-1) ** j * math.factorial(j) * x0 ** (-j - 1))
        derivs.append(value + inner / (4.0 * beta))
    d1, d2, d3, d4 = derivs
    delta = x - x0
    numerator = d1 + d2 * delta / 2 + d3 * delta ** 2 / 6 + d4 * delta ** 3 / 24
    return numerator / (-8.0 * beta - 16.0 * beta ** 2 * delta)


def eval_rrc(t: ArrayLike, beta: float, T: float) -> ArrayLike:
    """Unit-energy root-raised-cosine pulse g_beta(t) with symbol time T."""
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise InvalidArgument(f"beta must lie in [0, 1], got {beta}")
    if not (math.isfinite(T) and T > 0):
        raise InvalidArgument(f"T must be positive and finite, got {T}")
    if beta == 0.0:
        return eval_sinc(t, 1.0 / (2.0 * T))

    arr = _finite("t", t)
    x = np.abs(np.atleast_1d(arr)) / T
    u = 4.0 * beta * x
    with np.errstate(divide="ignore", invalid="ignore"):
        numerator = (np.cos((1.0 + beta) * math.pi * x)
                     + (1.0 - beta) * math.pi / (4.0 * beta) * np.sinc((1.0 - beta) * x))
        ratio = numerator / (1.0 - u * u)
    near = np.abs(x - 1.0 / (4.0 * beta)) < TAYLOR_RADIUS
    if near.any():
        ratio[near] = _rrc_pole_series(x[near], beta)
    result = 4.0 * beta / (math.pi * math.sqrt(T)) * ratio
    return _like_input(result.reshape(np.shape(arr)), t)


# ═══════════════════════════════════════════════════════════════
# FREQUENCY DOMAIN
# ═══════════════════════════════════════════════════════════════

def sinc_spectrum(omega: ArrayLike, W: float) -> ArrayLike:
    """sqrt(T) on |omega| <= 2 pi W, zero elsewhere."""
    if not (math.isfinite(W) and W > 0):
        raise InvalidArgument(f"W must be positive and finite, got {W}")
    arr = _finite("omega", omega)
    T = 1.0 / (2.0 * W)
    return _like_input(np.where(np.abs(arr) <= 2.0 * math.pi * W, math.sqrt(T), 0.0), omega)


def rrc_spectrum(omega: ArrayLike, beta: float, T: float) -> ArrayLike:
    """Three-branch RRC spectrum: flat sqrt(T), sine roll-off, zero."""
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise InvalidArgument(f"beta must lie in [0, 1], got {beta}")
    if not (math.isfinite(T) and T > 0):
        raise InvalidArgument(f"T must be positive and finite, got {T}")
    if beta == 0.0:
        return sinc_spectrum(omega, 1.0 / (2.0 * T))

    arr = _finite("omega", omega)
    w = np.abs(arr)
    flat_edge = (1.0 - beta) * math.pi / T
    stop_edge = (1.0 + beta) * math.pi / T
    rolloff = np.sqrt(T / 2.0) * np.sqrt(np.clip(
        1.0 - np.sin(T / (2.0 * beta) * (w - math.pi / T)), 0.0, None))
    result = np.where(w <= flat_edge, math.sqrt(T), np.where(w <= stop_edge, rolloff, 0.0))
    return _like_input(result, omega)


# ═══════════════════════════════════════════════════════════════
# AUTOCORRELATION
# ═══════════════════════════════════════════════════════════════

def _cos_ratio(u: np.ndarray) -> np.ndarray:
    """cos(pi u / 2) / (1 - u^2) with the |u| = 1 limit pi/4."""
    au = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.cos(math.pi * au / 2.0) / (1.0 - au * au)
    near = np.abs(au - 1.0) < TAYLOR_RADIUS
    if near.any():
        e = au[near] - 1.0
        out[near] = (math.pi / 2.0 - math.pi ** 3 * e ** 2 / 48.0) / (2.0 + e)
    return out


def raised_cosine(x: ArrayLike, beta: float) -> ArrayLike:
    """sinc(x) cos(pi beta x) / (1 - 4 beta^2 x^2), x in symbol times."""
    arr = np.atleast_1d(_finite("x", x))
    result = np.sinc(arr) * _cos_ratio(2.0 * beta * arr)
    return _like_input(result.reshape(np.shape(x)), x)


# ═══════════════════════════════════════════════════════════════
# PULSE FAMILIES
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class PulseShape:
    """A band-limited pulse; gain scales amplitude (gain = 1 is unit energy)."""
    kind: PulseKind
    bandwidth_W: float = DEFAULT_BANDWIDTH_W
    rolloff_beta: float = 0.0
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not (math.isfinite(self.bandwidth_W) and self.bandwidth_W > 0):
            raise InvalidArgument(f"bandwidth_W must be positive, got {self.bandwidth_W}")
        if not (0.0 <= self.rolloff_beta <= 1.0):
            raise InvalidArgument(f"rolloff_beta must lie in [0, 1], got {self.rolloff_beta}")
        if self.kind is PulseKind.SINC and self.rolloff_beta != 0.0:
            raise InvalidArgument("sinc pulses have no roll-off")
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise InvalidArgument(f"gain must be positive, got {self.gain}")

    @classmethod
    def sinc(cls, W: float = DEFAULT_BANDWIDTH_W) -> "PulseShape":
        return cls(PulseKind.SINC, bandwidth_W=W)

    @classmethod
    def rrc(cls, beta: float, T: float = 1.0) -> "PulseShape":
        if not (math.isfinite(T) and T > 0):
            raise InvalidArgument(f"T must be positive and finite, got {T}")
        return cls(PulseKind.RRC, bandwidth_W=1.0 / (2.0 * T), rolloff_beta=beta)

    @property
    def symbol_time_T(self) -> float:
        return 1.0 / (2.0 * self.bandwidth_W)

    @property
    def support_omega(self) -> float:
        """Largest |omega| where the spectrum can be non-zero."""
        return 2.0 * math.pi * self.bandwidth_W * (1.0 + self.rolloff_beta)

    @property
    def energy(self) -> float:
        return self.gain ** 2

    def scaled(self, factor: float) -> "PulseShape":
        return replace(self, gain=self.gain * factor)

    def time(self, t: ArrayLike) -> ArrayLike:
        if self.kind is PulseKind.SINC:
            values = eval_sinc(t, self.bandwidth_W)
        else:
            values = eval_rrc(t, self.rolloff_beta, self.symbol_time_T)
        return self.gain * values

    def spectrum(self, omega: ArrayLike) -> ArrayLike:
        if self.kind is PulseKind.SINC:
            values = sinc_spectrum(omega, self.bandwidth_W)
        else:
            values = rrc_spectrum(omega, self.rolloff_beta, self.symbol_time_T)
        return self.gain * values

    def autocorrelation(self, lag: ArrayLike) -> ArrayLike:
        """<g, g(. - lag)> in closed form."""
        x = np.asarray(_finite("lag", lag)) / self.symbol_time_T
        if self.kind is PulseKind.SINC:
            values = np.sinc(x)
        else:
            values = raised_cosine(x, self.rolloff_beta)
        return _like_input(self.energy * np.asarray(values), lag)

    def describe(self) -> str:
        if self.kind is PulseKind.SINC:
            return f"sinc(W={self.bandwidth_W:g}, gain={self.gain:.6g})"
        return (f"rrc(beta={self.rolloff_beta:g}, T={self.symbol_time_T:g}, "
                f"gain={self.gain:.6g})")


@dataclass(frozen=True)
class Interval:
    """Closed time interval [a, b]; either end may be infinite."""
    a: float
    b: float

    def __post_init__(self):
        if math.isnan(self.a) or math.isnan(self.b) or not (self.a < self.b):
            raise InvalidArgument(f"Interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class TimeShiftGrid:
    """m pulses at shifts rho*T*(k-1), k = 1..m."""
    rho: float
    count_m: int
    symbol_time_T: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0):
            raise InvalidArgument(f"rho must lie in (0, 1], got {self.rho}")
        if self.count_m < 1:
            raise InvalidArgument(f"count_m must be >= 1, got {self.count_m}")
        if not (self.symbol_time_T > 0):
            raise InvalidArgument(f"symbol_time_T must be positive, got {self.symbol_time_T}")

    @classmethod
    def from_nyquist(cls, n: int, rho: float, T: float = 1.0) -> "TimeShiftGrid":
        """m = floor(n / rho) samples in the time of n Nyquist samples."""
        if n < 1:
            raise InvalidArgument(f"n must be >= 1, got {n}")
        return cls(rho=rho, count_m=int(math.floor(n / rho + 1e-9)), symbol_time_T=T)

    @property
    def shift_step(self) -> float:
        return self.rho * self.symbol_time_T

    @property
    def shifts(self) -> np.ndarray:
        return self.shift_step * np.arange(self.count_m)


@dataclass(frozen=True)
class ShiftedPulse:
    """g(t - delay), usable as a least-squares target with a known spectrum."""
    pulse: PulseShape
    delay: float = 0.0

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return self.pulse.time(np.asarray(t) - self.delay)

    def spectrum(self, omega: ArrayLike) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        return self.pulse.spectrum(omega) * np.exp(-1j * omega * self.delay)

    @property
    def energy(self) -> float:
        return self.pulse.energy


# ═══════════════════════════════════════════════════════════════
# QUADRATURE INNER PRODUCT (oracle)
# ═══════════════════════════════════════════════════════════════

def _sinc_tail(a: float, b: float, edge: float, right: bool) -> float:
    """
    Asymptotic tail of sinc(s-a) sinc(s-b) beyond edge (normalized time),
    mean term plus the first oscillatory term; the remainder is O(edge^-3).
    """
    d = a - b
    phi = math.pi * (a + b)
    if right:
        base = edge - a
        mean = math.log1p(d / base) / d if d != 0 else 1.0 / base
        q = (edge - a) * (edge - b)
        osc = math.sin(2 * math.pi * edge - phi) / (4 * math.pi ** 3 * q)
    else:
        base = b - edge
        mean = math.log1p(d / base) / d if d != 0 else 1.0 / base
        q = (edge - a) * (edge - b)
        osc = -math.sin(2 * math.pi * edge - phi) / (4 * math.pi ** 3 * q)
    return math.cos(math.pi * d) / (2 * math.pi ** 2) * mean + osc


def _tail(p: PulseShape, tau1: float, tau2: float, edge: float, right: bool) -> float:
    """Integral of g(t-tau1) g(t-tau2) over (edge, inf) or (-inf, edge)."""
    T = p.symbol_time_T
    if p.kind is PulseKind.SINC and p.bandwidth_W > 0:
        return p.energy * _sinc_tail(tau1 / T, tau2 / T, edge / T, right)
    # RRC envelope decays like C/t^2, so the product tail is below C^2 / (3 h^3)
    beta = p.rolloff_beta
    h = max(abs(edge - tau1), abs(edge - tau2)) / T
    c = 4 * beta / math.pi * (1 + 1 / (4 * beta)) / (16 * beta ** 2)
    logger.debug(f"RRC tail beyond {edge:.4g} bounded by {p.energy * c * c / (3 * h ** 3):.2e}")
    return 0.0


def pulse_inner_product(p: PulseShape, tau1: float, tau2: float,
                        window: Optional[Interval] = None,
                        tol: float = QUAD_ABS_TOL) -> float:
    """
    Integral of g(t - tau1) g(t - tau2) over the window (all of R when None).

    Infinite ranges are cut TRUNCATION_SYMBOLS symbol times beyond the pulses;
    sinc tails beyond the cut are added from their asymptotic expansion.
    """
    tau1 = float(_finite("tau1", tau1))
    tau2 = float(_finite("tau2", tau2))
    T = p.symbol_time_T
    reach = TRUNCATION_SYMBOLS * T
    cut_lo = min(tau1, tau2) - reach
    cut_hi = max(tau1, tau2) + reach
    lo, hi = (-math.inf, math.inf) if window is None else (window.a, window.b)

    a, b = max(lo, cut_lo), min(hi, cut_hi)
    value = 0.0
    if a < b:
        value = integrate(lambda t: p.time(t - tau1) * p.time(t - tau2), a, b,
                          spacing=QUAD_BREAK_SYMBOLS * T, breakpoints=(tau1, tau2), tol=tol).value
    if lo < cut_lo:
        left_end = min(hi, cut_lo)
        value += _tail(p, tau1, tau2, left_end, right=False)
        if math.isfinite(lo):
            value -= _tail(p, tau1, tau2, lo, right=False)
    if hi > cut_hi:
        right_start = max(lo, cut_hi)
        value += _tail(p, tau1, tau2, right_start, right=True)
        if math.isfinite(hi):
            value -= _tail(p, tau1, tau2, hi, right=True)
    return value

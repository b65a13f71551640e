"""
FTN Toeplitz Toolkit — Capacity
Capacity formulas for the discrete Gaussian channel, the naive FTN capacity
C(rho) that appears to beat Shannon, and the capacity of precoded RRC
transmission, together with the sweeps exported by the CLI.

Power enters only through the ratio P / (N0 W); absolute units are the
caller's bookkeeping.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from errors import InvalidArgument

logger = logging.getLogger(__name__)

# The average-power identity behind C(rho) assumes FTN signals are localized in
# time; they are not, so the true long-run power is smaller than P.
AVERAGE_POWER_CAVEAT = (
    "average power rho*Es/(rho*T) = P holds only if FTN signals were localized in time; "
    "they are not, so the naive C(rho) overstates capacity"
)


@dataclass(frozen=True)
class CapacityPoint:
    rho: float
    beta: float
    W: float
    P: float
    N0: float
    value: float


def _check_common(W: float, P: float, N0: float):
    if not (math.isfinite(W) and W > 0):
        raise InvalidArgument(f"W must be positive, got {W}")
    if not (math.isfinite(P) and P >= 0):
        raise InvalidArgument(f"P must be non-negative, got {P}")
    if not (math.isfinite(N0) and N0 > 0):
        raise InvalidArgument(f"N0 must be positive, got {N0}")


def _check_rho(rho: float):
    if not (math.isfinite(rho) and 0.0 < rho <= 1.0):
        raise InvalidArgument(f"rho must lie in (0, 1], got {rho}")


def capacity_per_sample(Es: float, N0: float) -> float:
    """1/2 log2(1 + 2 Es / N0) bits per real sample."""
    if not (math.isfinite(N0) and N0 > 0):
        raise InvalidArgument(f"N0 must be positive, got {N0}")
    if not (math.isfinite(Es) and Es >= 0):
        raise InvalidArgument(f"Es must be non-negative, got {Es}")
    return 0.5 * math.log2(1.0 + 2.0 * Es / N0)


def capacity_block(m: int, rho: float, Es: float, N0: float) -> float:
    """C_m = m * 1/2 log2(1 + 2 rho Es / N0) bits for m precoded samples."""
    if m < 0:
        raise InvalidArgument(f"m must be non-negative, got {m}")
    _check_rho(rho)
    return m * capacity_per_sample(rho * Es, N0)


def shannon_capacity(W: float, P: float, N0: float) -> float:
    _check_common(W, P, N0)
    return W * math.log2(1.0 + P / (N0 * W))


def ftn_naive_capacity(rho: float, W: float, P: float, N0: float) -> float:
    """C(rho) = (W/rho) log2(1 + rho P / (N0 W)) bits/second."""
    _check_rho(rho)
    _check_common(W, P, N0)
    return W / rho * math.log2(1.0 + rho * P / (N0 * W))


def precoded_capacity(W_prime: float, P: float, N0: float) -> float:
    """Precoded FTN with pulses of total bandwidth W' behaves as an orthogonal system of bandwidth W'."""
    return shannon_capacity(W_prime, P, N0)


def precoded_rrc_capacity(beta: float, W: float, P: float, N0: float) -> float:
    """(1+beta) W log2(1 + P / (N0 W (1+beta)))."""
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise InvalidArgument(f"beta must lie in [0, 1], got {beta}")
    _check_common(W, P, N0)
    wide = (1.0 + beta) * W
    return wide * math.log2(1.0 + P / (N0 * wide))


def paradox_gap(rho: float, W: float, P: float, N0: float) -> float:
    """C(rho) - C(1); strictly positive for rho < 1 and P > 0."""
    if not (math.isfinite(rho) and 0.0 < rho < 1.0):
        raise InvalidArgument(f"rho must lie in (0, 1), got {rho}")
    return ftn_naive_capacity(rho, W, P, N0) - ftn_naive_capacity(1.0, W, P, N0)


def average_power(rho: float, Es: float, T: float) -> float:
    """Long-run power rho Es / (rho T) under the localization premise; see AVERAGE_POWER_CAVEAT."""
    _check_rho(rho)
    if not (T > 0):
        raise InvalidArgument(f"T must be positive, got {T}")
    return rho * Es / (rho * T)


# ═══════════════════════════════════════════════════════════════
# SWEEPS
# ═══════════════════════════════════════════════════════════════

def capacity_rho_sweep(rho_min: float, rho_max: float, points: int,
                       snr_ratio: float, W: float = 1.0) -> pd.DataFrame:
    """Naive C(rho) on an even rho grid, P = snr_ratio * N0 * W with N0 = 1."""
    _check_rho(rho_min)
    _check_rho(rho_max)
    if points < 2 or rho_min >= rho_max:
        raise InvalidArgument("rho sweep needs rho_min < rho_max and at least 2 points")
    P = snr_ratio * W
    sweep = [CapacityPoint(rho=float(r), beta=0.0, W=W, P=P, N0=1.0,
                         value=ftn_naive_capacity(float(r), W, P, 1.0))
           for r in np.linspace(rho_min, rho_max, points)]
    logger.info(f"Capacity sweep over {points} rho values in [{rho_min:g}, {rho_max:g}] "
                f"at P/(N0 W) = {snr_ratio:g}")
    return _frame([p.rho for p in sweep], snr_ratio, [p.value for p in sweep])


def capacity_beta_sweep(beta_values: Sequence[float], snr_ratio: float, W: float = 1.0) -> pd.DataFrame:
    """Precoded RRC capacity for each roll-off."""
    P = snr_ratio * W
    sweep = [CapacityPoint(rho=1.0 / (1.0 + b), beta=b, W=W, P=P, N0=1.0,
                         value=precoded_rrc_capacity(b, W, P, 1.0))
           for b in beta_values]
    return _frame([p.beta for p in sweep], snr_ratio, [p.value for p in sweep])


def _frame(axis: Sequence[float], snr_ratio: float, values: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame({"rho_or_beta": list(axis), "snr_ratio": snr_ratio, "capacity": list(values)},
                        columns=["rho_or_beta", "snr_ratio", "capacity"])

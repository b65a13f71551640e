"""
FTN Toeplitz Toolkit — Precoded Channel
Matched-filter AWGN channel for FTN blocks: precoding with H^(-1/2), noise
synthesis in the matched-filter domain, decoding and Monte Carlo BER with
Wilson confidence intervals. Every block draws from its own Philox stream.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc
from scipy.stats import norm

from config import NYQUIST_BLOCK_BITS, WILSON_CONFIDENCE, TransmissionConfig
from errors import IllConditionedError, InvalidArgument
from toeplitz_gramian import (
    PrecodingMode, PrecodingOperator, ToeplitzGramian, build_rrc_gramian,
    build_sinc_gramian, inverse_sqrt_circulant, inverse_sqrt_exact,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockResult:
    sent_bits: np.ndarray
    decoded_soft: np.ndarray
    decoded_bits: np.ndarray
    bit_errors: int
    block_error: bool


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bits: int
    errors: int
    block_errors: int
    blocks: int
    ber: float
    ci_low: float
    ci_high: float
    q_oracle: float
    precoder_mode: str

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0


# ═══════════════════════════════════════════════════════════════
# SCALAR HELPERS
# ═══════════════════════════════════════════════════════════════

def snr_to_sigma(snr_db: float) -> float:
    """sigma = 10^(-snr_db/20); +inf dB means a noiseless channel."""
    if snr_db == math.inf:
        return 0.0
    if not math.isfinite(snr_db):
        raise InvalidArgument(f"snr_db must be finite or +inf, got {snr_db}")
    return 10.0 ** (-snr_db / 20.0)


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 erfc(x / sqrt 2)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def wilson_interval(errors: int, trials: int, confidence: float = WILSON_CONFIDENCE) -> Tuple[float, float]:
    if trials <= 0:
        raise InvalidArgument(f"trials must be positive, got {trials}")
    if not (0 <= errors <= trials):
        raise InvalidArgument(f"errors must lie in [0, {trials}], got {errors}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return low, high


def throughput(rate: float, payload_bits: float) -> float:
    """(1 - error rate) * payload bits; accepts a block- or a bit-error rate."""
    if not (0.0 <= rate <= 1.0):
        raise InvalidArgument(f"error rate must lie in [0, 1], got {rate}")
    if payload_bits < 0:
        raise InvalidArgument(f"payload_bits must be non-negative, got {payload_bits}")
    return (1.0 - rate) * payload_bits


def physical_bits_for_block(rho: float, nyquist_bits: int = NYQUIST_BLOCK_BITS) -> int:
    """Physical bits that fit in the time of a Nyquist-rate block when packing at rho."""
    if not (0.0 < rho <= 1.0):
        raise InvalidArgument(f"rho must lie in (0, 1], got {rho}")
    return int(math.floor(nyquist_bits / rho + 1e-9))


def payload_bits(physical_bits: int, code_rate: float) -> float:
    if not (0.0 < code_rate <= 1.0):
        raise InvalidArgument(f"code_rate must lie in (0, 1], got {code_rate}")
    return physical_bits * code_rate


# ═══════════════════════════════════════════════════════════════
# CHANNEL CHAIN
# ═══════════════════════════════════════════════════════════════

def precode(x: np.ndarray, K: PrecodingOperator) -> np.ndarray:
    """A = K x."""
    return K.apply(x)


def channel_pass(a: np.ndarray, H: ToeplitzGramian, N0: float,
                 rng: Optional[np.random.Generator]) -> np.ndarray:
    """Y = H A + H^(1/2) V with V ~ N(0, N0/2) i.i.d.; columns of `a` are separate blocks."""
    if N0 < 0:
        raise InvalidArgument(f"N0 must be non-negative, got {N0}")
    a = np.asarray(a, dtype=float)
    y = H.matvec(a)
    if N0 == 0.0:
        return y
    if rng is None:
        raise InvalidArgument("A random stream is required when N0 > 0")
    noise = rng.normal(0.0, math.sqrt(N0 / 2.0), size=a.shape)
    return y + H.sqrt_matrix @ noise


def decode(y: np.ndarray, K: PrecodingOperator) -> np.ndarray:
    """S = K Y = H^(1/2) A + V."""
    return K.apply(y)


def block_stream(seed: int, block_index: int) -> np.random.Generator:
    """Independent substream for one block: Philox keyed by seed XOR block index."""
    return np.random.Generator(np.random.Philox(key=int(seed) ^ int(block_index)))


def gramian_for_config(config: TransmissionConfig) -> ToeplitzGramian:
    if config.pulse == "sinc":
        return build_sinc_gramian(config.rho, config.block_m, config.W, config.normalization)
    return build_rrc_gramian(config.rho, config.beta, config.block_m, config.symbol_time_T,
                             config.normalization)


def precoder_for_config(config: TransmissionConfig, H: ToeplitzGramian) -> PrecodingOperator:
    """Exact or circulant H^(-1/2); a circulant request on a vanishing symbol falls back to exact."""
    if config.precoder_mode == PrecodingMode.CIRCULANT.value:
        try:
            return inverse_sqrt_circulant(H)
        except IllConditionedError as e:
            logger.warning(f"Circulant precoder unavailable, using exact eigendecomposition: {e}")
    return inverse_sqrt_exact(H)


# ═══════════════════════════════════════════════════════════════
# MONTE CARLO
# ═══════════════════════════════════════════════════════════════

class BerSimulator:
    """Hard-decision BPSK over the precoded FTN channel for one configuration."""

    def __init__(self, config: TransmissionConfig, threads: int = 1,
                 gramian: Optional[ToeplitzGramian] = None,
                 precoder: Optional[PrecodingOperator] = None):
        if threads < 1:
            raise InvalidArgument(f"threads must be >= 1, got {threads}")
        self.config = config
        self.threads = threads
        self.H = gramian if gramian is not None else gramian_for_config(config)
        self.K = precoder if precoder is not None else precoder_for_config(config, self.H)

    def simulate_block(self, block_index: int, config: Optional[TransmissionConfig] = None) -> BlockResult:
        config = config or self.config
        rng = block_stream(config.seed, block_index)
        m = config.block_m
        bits = rng.integers(0, 2, size=m)
        amplitude = math.sqrt(config.sample_energy)
        x = np.where(bits == 1, amplitude, -amplitude)

        a = precode(x, self.K)
        y = channel_pass(a, self.H, config.noise_density, rng)
        s = decode(y, self.K)

        decided = (s >= 0.0).astype(bits.dtype)
        errors = int(np.count_nonzero(decided != bits))
        return BlockResult(sent_bits=bits, decoded_soft=s, decoded_bits=decided,
                           bit_errors=errors, block_error=errors > 0)

    def run_point(self, snr_db: Optional[float], min_bits: int) -> BerPoint:
        config = replace(self.config, snr_db=snr_db) if snr_db is not None else self.config
        blocks = int(math.ceil(min_bits / config.block_m))

        def run(index: int) -> Tuple[int, bool]:
            result = self.simulate_block(index, config)
            return result.bit_errors, result.block_error

        if self.threads == 1:
            outcomes = [run(i) for i in range(blocks)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                outcomes = list(pool.map(run, range(blocks)))

        bits = blocks * config.block_m
        errors = sum(e for e, _ in outcomes)
        block_errors = sum(1 for _, failed in outcomes if failed)
        low, high = wilson_interval(errors, bits)
        sigma = config.sigma
        oracle = 0.0 if sigma == 0.0 else float(q_function(math.sqrt(config.sample_energy) / sigma))
        label = "inf" if config.snr_db == math.inf else f"{config.snr_db}"
        logger.info(f"  SNR={label} dB: {errors}/{bits} errors, BER={errors / bits:.4e} "
                    f"(Q oracle {oracle:.4e})")
        return BerPoint(snr_db=config.snr_db if config.snr_db is not None else float("nan"),
                        bits=bits, errors=errors, block_errors=block_errors, blocks=blocks,
                        ber=errors / bits, ci_low=low, ci_high=high, q_oracle=oracle,
                        precoder_mode=self.K.mode.value)

    def run_all(self, snr_grid: Sequence[float], min_bits: int) -> List[BerPoint]:
        if min_bits < 1:
            raise InvalidArgument(f"min_bits must be positive, got {min_bits}")
        if min_bits < 10_000:
            logger.warning(f"min_bits={min_bits} gives wide confidence intervals")
        c = self.config
        logger.info(f"BER run: pulse={c.pulse}, rho={c.rho:.6g}, beta={c.beta:g}, m={c.block_m}, "
                    f"precoder={self.K.mode.value}, energy={c.energy_convention.value}, seed={c.seed}")
        return [self.run_point(snr, min_bits) for snr in snr_grid]


def simulate_block(config: TransmissionConfig, block_index: int = 0) -> BlockResult:
    return BerSimulator(config).simulate_block(block_index)


def run_ber(config: TransmissionConfig, snr_grid: Sequence[float], min_bits: int,
            threads: int = 1) -> List[BerPoint]:
    """Monte Carlo BER at each SNR; the same block streams are reused across SNR points."""
    return BerSimulator(config, threads=threads).run_all(snr_grid, min_bits)

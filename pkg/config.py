"""
FTN Toeplitz Toolkit — Configuration
Numerical constants, physical defaults and the validated run configurations.
"""

import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

from dotenv import dotenv_values

from errors import InvalidArgument, InvalidConfig

TOOLKIT_VERSION = "1.0.0"

# ═══════════════════════════════════════════════════════════════
# NUMERICAL INTEGRATION
# ═══════════════════════════════════════════════════════════════

QUAD_ABS_TOL = 1e-10           # Absolute tolerance for adaptive quadrature
QUAD_REL_TOL = 1e-12           # Relative tolerance for adaptive quadrature
QUAD_LIMIT = 200               # Subinterval budget beyond the breakpoints
QUAD_BREAK_SYMBOLS = 2.0       # Adaptive quadrature breakpoints every 2 T on long ranges
GAUSS_LEGENDRE_ORDER = 16      # Nodes per panel of the fixed composite rule
PANEL_WIDTH_SYMBOLS = 0.5      # Fixed-rule panel width in symbol times T
TRUNCATION_SYMBOLS = 500       # Infinite integrals cut at |t| <= 500 T around the pulses
TAYLOR_RADIUS = 1e-4           # Removable singularities use a series inside this radius

# ═══════════════════════════════════════════════════════════════
# LINEAR ALGEBRA
# ═══════════════════════════════════════════════════════════════

CONDITIONING_FACTOR = 1e-10    # min_lambda_tol = 1e-10 * sup f
DENSE_EIGEN_MAX_ORDER = 4096   # Beyond this only the circulant path is offered
PSD_SLACK = 1e-9               # Eigenvalues may undershoot inf f by this much
LSTSQ_RCOND = 1e-13            # Relative eigenvalue cutoff for least squares
SYMBOL_MIN_PANELS = 64         # Gauss-Legendre panels on [-pi, pi] for symbol Fourier coefficients

# ═══════════════════════════════════════════════════════════════
# PHYSICAL DEFAULTS
# ═══════════════════════════════════════════════════════════════

DEFAULT_BANDWIDTH_W = 0.5      # Hz, gives T = 1
DEFAULT_ROLLOFF = 0.22         # WCDMA-style roll-off
NYQUIST_BLOCK_BITS = 4000      # Physical bits per block at rho = 1
WILSON_CONFIDENCE = 0.95

RNG_ALGORITHM = "numpy.random.Philox"

PULSE_KINDS = ("sinc", "rrc")
PRECODER_MODES = ("exact", "circulant")
NORMALIZATIONS = ("unit", "sqrt_rho")


class EnergyConvention(str, Enum):
    PER_SAMPLE = "per_sample"          # every FTN sample carries Es
    NYQUIST_POWER = "nyquist_power"    # constant power: every FTN sample carries rho * Es


ENERGY_CONVENTIONS = tuple(c.value for c in EnergyConvention)

# ═══════════════════════════════════════════════════════════════
# CLAIM MARKERS WRITTEN BY THE CLI
# ═══════════════════════════════════════════════════════════════

OUTSIDE_ENERGY_CLAIM = 0.5        # worst case at rho=0.81, n=20, m=15 exceeds this
ALTERNATING_WIDE_TARGET = 0.75    # alternating signs, Omega = [-rho, rho m]
ALTERNATING_NARROW_TARGET = 0.27  # alternating signs, Omega = [0, rho (m-1)]
ALTERNATING_TOLERANCE = 0.03

# ═══════════════════════════════════════════════════════════════
# OUTPUT
# ═══════════════════════════════════════════════════════════════

OUTPUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "results")
LOG_FILE = "ftn_toolkit.log"
LOG_FORMAT = "%(asctime)s | %(levelname)-7s | %(name)-17s | %(message)s"
LOG_DATEFMT = "%H:%M:%S"
CSV_FLOAT_FORMAT = "%.12g"

EXPERIMENT_KINDS = ("gramian", "localize", "approx", "simulate", "capacity", "effective-pulse")


@dataclass(frozen=True)
class TransmissionConfig:
    """Physical parameters of a precoded FTN transmission."""
    rho: float = 1.0
    beta: float = DEFAULT_ROLLOFF
    W: float = DEFAULT_BANDWIDTH_W
    block_m: int = 128
    Es: float = 1.0
    N0: float = 1.0
    snr_db: Optional[float] = None               # when set, overrides N0 via sigma
    seed: int = 0
    precoder_mode: str = "exact"
    pulse: str = "rrc"
    energy_convention: EnergyConvention = EnergyConvention.NYQUIST_POWER
    normalization: str = "sqrt_rho"

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0):
            raise InvalidArgument(f"rho must lie in (0, 1], got {self.rho}")
        if not (0.0 <= self.beta <= 1.0):
            raise InvalidArgument(f"beta must lie in [0, 1], got {self.beta}")
        if not (self.W > 0 and math.isfinite(self.W)):
            raise InvalidArgument(f"W must be positive, got {self.W}")
        if self.block_m < 1:
            raise InvalidArgument(f"block_m must be >= 1, got {self.block_m}")
        if self.Es < 0 or self.N0 < 0:
            raise InvalidArgument("Es and N0 must be non-negative")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidArgument(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.snr_db is not None and math.isnan(self.snr_db):
            raise InvalidArgument("snr_db must not be NaN")
        try:
            object.__setattr__(self, "energy_convention", EnergyConvention(self.energy_convention))
        except ValueError as e:
            raise InvalidArgument(f"energy_convention must be one of {ENERGY_CONVENTIONS}, "
                                  f"got {self.energy_convention!r}") from e
        for name, allowed in (("precoder_mode", PRECODER_MODES), ("pulse", PULSE_KINDS),
                              ("normalization", NORMALIZATIONS)):
            if getattr(self, name) not in allowed:
                raise InvalidArgument(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")

    @property
    def symbol_time_T(self) -> float:
        return 1.0 / (2.0 * self.W)

    @property
    def sigma(self) -> float:
        """Noise standard deviation per matched-filter sample."""
        if self.snr_db is None:
            return math.sqrt(self.N0 / 2.0)
        if self.snr_db == math.inf:
            return 0.0
        return 10.0 ** (-self.snr_db / 20.0)

    @property
    def noise_density(self) -> float:
        return 2.0 * self.sigma ** 2

    @property
    def sample_energy(self) -> float:
        """Energy carried by one precoded sample X_k."""
        if self.energy_convention is EnergyConvention.NYQUIST_POWER:
            return self.rho * self.Es
        return self.Es

    def as_dict(self) -> Dict[str, Any]:
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values["energy_convention"] = self.energy_convention.value
        return values


# ═══════════════════════════════════════════════════════════════
# EXPERIMENT CONFIG FILES (flat KEY=VALUE, command line wins)
# ═══════════════════════════════════════════════════════════════

def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _integer(text: str) -> int:
    value = _number(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _number_list(text: str) -> List[float]:
    return [_number(part) for part in text.split(",") if part.strip()]


def _integer_list(text: str) -> List[int]:
    return [_integer(part) for part in text.split(",") if part.strip()]


def _flag(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip().lower()
        if value not in allowed:
            raise ValueError(f"{text!r} not in {allowed}")
        return value
    return parse


def _in_unit_interval(value: float, open_left: bool = True) -> bool:
    return (0.0 < value <= 1.0) if open_left else (0.0 <= value <= 1.0)


# key -> (parser, default as text, range check or None)
Schema = Dict[str, Tuple[Callable[[str], Any], str, Optional[Callable[[Any], bool]]]]

_RHO_OK = lambda v: _in_unit_interval(v)
_BETA_OK = lambda v: _in_unit_interval(v, open_left=False)
_POSITIVE = lambda v: v > 0
_RHO_LIST_OK = lambda vs: len(vs) > 0 and all(_RHO_OK(v) for v in vs)

EXPERIMENT_SCHEMAS: Dict[str, Schema] = {
    "gramian": {
        "pulse": (_choice(*PULSE_KINDS), "rrc", None),
        "rho": (_number, "0.9", _RHO_OK),
        "beta": (_number, "0.22", _BETA_OK),
        "n": (_integer, "256", lambda v: 1 <= v <= DENSE_EIGEN_MAX_ORDER),
        "normalization": (_choice("", *NORMALIZATIONS), "", None),
        "symbol_points": (_integer, "1024", _POSITIVE),
        "w": (_number, "0.5", _POSITIVE),
    },
    "localize": {
        "rho_values": (_number_list, "0.7,0.81,0.9,1.0", _RHO_LIST_OK),
        "n": (_integer, "20", _POSITIVE),
        "margins": (_integer_list, ",".join(str(m) for m in range(21)),
                    lambda vs: len(vs) > 0 and all(v >= 0 for v in vs) and vs == sorted(vs)),
        "claim_rho": (_number, "0.81", _RHO_OK),
        "claim_margin": (_integer, "15", lambda v: v >= 0),
        "alt_rho": (_number, "0.9", _RHO_OK),
        "alt_m": (_integer, "400", _POSITIVE),
        "samples_per_symbol": (_integer, "8", _POSITIVE),
        "w": (_number, "0.5", _POSITIVE),
    },
    "approx": {
        "rho_values": (_number_list, "1/2,1/3,1/4", _RHO_LIST_OK),
        "target_center": (_number, "6", None),
        "span": (_number, "4", _POSITIVE),
        "claim_threshold": (_number, "0.0084", _POSITIVE),   # relative L2 error at rho=1/4 plus 10%
        "samples_per_symbol": (_integer, "8", _POSITIVE),
        "w": (_number, "0.5", _POSITIVE),
    },
    "simulate": {
        "pulse": (_choice(*PULSE_KINDS), "rrc", None),
        "rho": (_number, "1/1.22", _RHO_OK),
        "beta": (_number, "0.22", _BETA_OK),
        "w": (_number, "0.5", _POSITIVE),
        "block_m": (_integer, "128", lambda v: 1 <= v <= DENSE_EIGEN_MAX_ORDER),
        "es": (_number, "1.0", lambda v: v >= 0),
        "snr_grid": (_number_list, "0,2,4,6,8", lambda vs: len(vs) > 0),
        "min_bits": (_integer, "100000", _POSITIVE),
        "precoder": (_choice(*PRECODER_MODES), "exact", None),
        "energy_convention": (_choice(*ENERGY_CONVENTIONS), "nyquist_power", None),
        "normalization": (_choice(*NORMALIZATIONS), "sqrt_rho", None),
        "include_noiseless": (_flag, "true", None),
        "baseline": (_flag, "true", None),
    },
    "capacity": {
        "rho_min": (_number, "0.5", _RHO_OK),
        "rho_max": (_number, "1.0", _RHO_OK),
        "rho_points": (_integer, "100", lambda v: v >= 2),
        "snr_ratio": (_number, "10", lambda v: v >= 0),
        "w": (_number, "1.0", _POSITIVE),
        "beta_values": (_number_list, "0,0.22,0.5,1",
                        lambda vs: len(vs) > 0 and all(_BETA_OK(v) for v in vs)),
        "claim_rho": (_number, "0.8", _RHO_OK),
    },
    "effective-pulse": {
        "beta": (_number, "0.22", lambda v: 0.0 < v <= 1.0),
        "half_widths": (_integer_list, "8,32,128",
                        lambda vs: len(vs) > 0 and all(1 <= v <= DENSE_EIGEN_MAX_ORDER // 2 for v in vs)),
        "ell": (_integer, "0", None),
        "t_span": (_number, "8", _POSITIVE),
        "samples_per_symbol": (_integer, "16", _POSITIVE),
        "w": (_number, "0.5", _POSITIVE),
    },
}

# Keys every kind accepts; the matching command-line flags take precedence
COMMON_KEYS = ("seed", "threads", "out")
RANDOMIZED_KINDS = ("simulate",)


@dataclass
class ExperimentConfig:
    """Validated configuration for one CLI experiment."""
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    out_dir: str = OUTPUT_DIR
    seed: Optional[int] = None
    threads: int = 1
    source: Optional[str] = None                  # config file path, if any

    @classmethod
    def load(cls, kind: str, config_path: Optional[str] = None,
             overrides: Optional[Dict[str, str]] = None,
             seed: Optional[int] = None, threads: Optional[int] = None,
             out_dir: Optional[str] = None) -> "ExperimentConfig":
        """Merge file values with command-line overrides and validate everything."""
        if kind not in EXPERIMENT_SCHEMAS:
            raise InvalidConfig(f"Unknown experiment kind {kind!r}; expected one of {EXPERIMENT_KINDS}")
        schema = EXPERIMENT_SCHEMAS[kind]

        raw: Dict[str, str] = {}
        if config_path:
            if not os.path.isfile(config_path):
                raise InvalidConfig(f"Config file not found: {config_path}")
            raw.update({k.strip().lower(): (v or "") for k, v in dotenv_values(config_path).items()})
        for key, value in (overrides or {}).items():
            raw[key.strip().lower()] = value

        unknown = sorted(k for k in raw if k not in schema and k not in COMMON_KEYS)
        if unknown:
            raise InvalidConfig(f"Unknown keys for '{kind}': {', '.join(unknown)}")

        params: Dict[str, Any] = {}
        for key, (parser, default, check) in schema.items():
            text = raw.get(key, default)
            try:
                value = parser(text)
            except (ValueError, ZeroDivisionError) as e:
                raise InvalidConfig(f"Cannot parse {key}={text!r}: {e}") from e
            if check is not None and not check(value):
                raise InvalidConfig(f"Value out of range: {key}={text!r}")
            params[key] = value

        if seed is None and "seed" in raw:
            try:
                seed = _integer(raw["seed"])
            except ValueError as e:
                raise InvalidConfig(f"Cannot parse seed={raw['seed']!r}") from e
        if seed is not None and not (0 <= seed < 2 ** 64):
            raise InvalidConfig(f"seed must be an unsigned 64-bit integer, got {seed}")
        if kind in RANDOMIZED_KINDS and seed is None:
            raise InvalidConfig(f"Experiment '{kind}' is randomized and needs an explicit seed (--seed)")

        if threads is None:
            try:
                threads = _integer(raw.get("threads", "1"))
            except ValueError as e:
                raise InvalidConfig(f"Cannot parse threads={raw['threads']!r}") from e
        if threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {threads}")

        if out_dir is None:
            out_dir = raw.get("out") or OUTPUT_DIR

        if kind == "capacity" and params["rho_min"] >= params["rho_max"]:
            raise InvalidConfig("rho_min must be smaller than rho_max")

        return cls(kind=kind, params=params, out_dir=out_dir, seed=seed,
                   threads=threads, source=config_path)

    def echo(self) -> Dict[str, Any]:
        """Everything needed to re-run the experiment."""
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "seed": self.seed,
            "threads": self.threads,
            "config_file": self.source,
        }

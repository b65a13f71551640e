"""
FTN Toeplitz Toolkit — Numerical Integration
Adaptive integration through scipy's QUADPACK wrappers for scalar and
matrix-valued integrands, and a fixed composite Gauss-Legendre rule for
integrating many vectorized products at once.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy.integrate import quad, quad_vec

from config import GAUSS_LEGENDRE_ORDER, QUAD_ABS_TOL, QUAD_LIMIT, QUAD_REL_TOL
from errors import InvalidArgument, NumericFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    intervals: int


def _check_limits(a: float, b: float):
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidArgument(f"Integration limits must be finite, got [{a}, {b}]")


def _split_edges(a: float, b: float, panel_width: Optional[float],
                 breakpoints: Optional[Iterable[float]]) -> np.ndarray:
    cuts = [a, b]
    if breakpoints is not None:
        cuts.extend(p for p in breakpoints if a < p < b)
    cuts = sorted(set(cuts))
    if panel_width is None:
        return np.array(cuts, dtype=float)
    if panel_width <= 0:
        raise InvalidArgument(f"panel_width must be positive, got {panel_width}")
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        count = max(1, int(np.ceil((hi - lo) / panel_width)))
        edges.append(np.linspace(lo, hi, count + 1)[:-1])
    edges.append(np.array([b]))
    return np.concatenate(edges)


def integrate(func: Callable[[float], float], a: float, b: float, *,
              spacing: Optional[float] = None, breakpoints: Optional[Iterable[float]] = None,
              tol: float = QUAD_ABS_TOL, limit: int = QUAD_LIMIT) -> QuadratureResult:
    """
    Integrate a scalar function over the finite interval [a, b] with scipy's quad.

    Breakpoints (kinks, pulse centres) and a grid every `spacing` are handed to
    QUADPACK as known difficult points; long oscillatory ranges need them.
    """
    _check_limits(a, b)
    if b == a:
        return QuadratureResult(0.0, 0.0, 0)
    if b < a:
        flipped = integrate(func, b, a, spacing=spacing, breakpoints=breakpoints, tol=tol, limit=limit)
        return QuadratureResult(-flipped.value, flipped.error_estimate, flipped.intervals)

    points = _split_edges(a, b, spacing, breakpoints)[1:-1]
    value, error, info, *message = quad(
        lambda t: float(func(t)), a, b, epsabs=tol, epsrel=QUAD_REL_TOL,
        limit=limit + len(points) + 2, points=points if len(points) else None, full_output=1)
    if message:
        if not error <= tol:
            raise NumericFailure(f"quad on [{a:.6g}, {b:.6g}] failed: {message[0]}", error_estimate=error)
        logger.debug(f"quad on [{a:.4g}, {b:.4g}] reported '{message[0]}' within tolerance")
    return QuadratureResult(float(value), float(error), int(info["last"]))


def integrate_matrix(func: Callable[[float], np.ndarray], a: float, b: float, *,
                     spacing: Optional[float] = None, tol: float = QUAD_ABS_TOL) -> np.ndarray:
    """Entrywise integral of a matrix-valued function with scipy's quad_vec (max-norm tolerance)."""
    _check_limits(a, b)
    points = _split_edges(min(a, b), max(a, b), spacing, None)[1:-1]
    value, error, info = quad_vec(func, a, b, epsabs=tol, epsrel=QUAD_REL_TOL, norm="max",
                                  points=points if len(points) else None, full_output=True)
    if not info.success and not error <= tol:
        raise NumericFailure(f"quad_vec on [{a:.6g}, {b:.6g}] failed: {info.message}", error_estimate=error)
    logger.debug(f"quad_vec on [{a:.4g}, {b:.4g}]: {info.intervals.shape[0]} intervals, error {error:.2e}")
    return np.asarray(value, dtype=float)


# ═══════════════════════════════════════════════════════════════
# FIXED COMPOSITE RULE
# ═══════════════════════════════════════════════════════════════

@lru_cache(maxsize=8)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def panel_nodes(lefts: np.ndarray, rights: np.ndarray,
                order: int = GAUSS_LEGENDRE_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite rule, shape (panels, order)."""
    x, w = _reference_rule(order)
    half = 0.5 * (rights - lefts)[:, None]
    mid = 0.5 * (rights + lefts)[:, None]
    return mid + half * x[None, :], half * w[None, :]


def fixed_rule(a: float, b: float, panel_width: float,
               order: int = GAUSS_LEGENDRE_ORDER,
               breakpoints: Optional[Iterable[float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened composite nodes and weights, for integrating many products at once."""
    edges = _split_edges(a, b, panel_width, breakpoints)
    nodes, weights = panel_nodes(edges[:-1], edges[1:], order)
    return nodes.ravel(), weights.ravel()

"""
Utility functions for the stochastic-order game toolkit.
Contains logging setup, simplex helpers and signed log-domain arithmetic.
"""

import itertools
import logging
import os
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .exceptions import NotASimplexError

SIMPLEX_TOL = 1e-12


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> None:
    """
    Setup logging configuration.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file (optional)
    """
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    simple_formatter = logging.Formatter(
        '%(levelname)s: %(message)s'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console output goes to stderr so JSON on stdout stays clean
    console_handler = logging.StreamHandler()
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(simple_formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        try:
            log_dir = os.path.dirname(log_file)
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)

            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setLevel(numeric_level)
            file_handler.setFormatter(detailed_formatter)
            root_logger.addHandler(file_handler)

            logging.info(f"Logging to file: {log_file}")
        except OSError as e:
            logging.warning(f"Could not setup file logging: {e}")


def as_simplex(values: Sequence[float], name: str = "strategy", tol: float = SIMPLEX_TOL) -> np.ndarray:
    """
    Validate a probability vector and return it as a read-only float array.

    Args:
        values: Candidate probability vector
        name: Name used in error messages
        tol: Allowed deviation of the sum from 1 and of entries below 0

    Returns:
        The vector as a numpy array

    Raises:
        NotASimplexError: If the vector is empty, negative or does not sum to 1
    """
    vec = np.array(values, dtype=float).reshape(-1)
    if vec.size == 0:
        raise NotASimplexError(f"{name} is empty")
    if not np.all(np.isfinite(vec)):
        raise NotASimplexError(f"{name} has non-finite entries: {vec.tolist()}")
    if np.any(vec < -tol):
        raise NotASimplexError(f"{name} has negative entries: {vec.tolist()}")
    total = float(vec.sum())
    if abs(total - 1.0) > tol:
        raise NotASimplexError(f"{name} sums to {total!r}, not 1")
    vec = np.clip(vec, 0.0, None)
    vec.setflags(write=False)
    return vec


def unit_vector(size: int, index: int) -> np.ndarray:
    """Pure strategy e_index of the given length."""
    vec = np.zeros(size)
    vec[index] = 1.0
    return vec


def grid_steps(resolution: float) -> int:
    """
    Number of grid steps for a simplex resolution.

    Raises:
        ValueError: If the resolution does not divide 1 evenly
    """
    if not 0.0 < resolution <= 1.0:
        raise ValueError(f"Simplex resolution must be in (0, 1], got {resolution}")
    steps = int(round(1.0 / resolution))
    if abs(steps * resolution - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"Simplex resolution {resolution} does not divide 1 evenly")
    return steps


def simplex_grid(size: int, resolution: float) -> np.ndarray:
    """
    Enumerate all points of the probability simplex on a regular grid.

    Points are produced in a fixed order (stars-and-bars over the bar positions),
    so two calls with the same arguments return identical arrays.

    Args:
        size: Number of actions
        resolution: Grid step, must divide 1 evenly

    Returns:
        Array of shape (count, size)
    """
    steps = grid_steps(resolution)
    if size == 1:
        return np.ones((1, 1))
    points = []
    for bars in itertools.combinations(range(steps + size - 1), size - 1):
        edges = (-1,) + bars + (steps + size - 1,)
        counts = [edges[k + 1] - edges[k] - 1 for k in range(size)]
        points.append(counts)
    return np.array(points, dtype=float) / steps


def signed_log_add(log_a: np.ndarray, sign_a: np.ndarray,
                   log_b: np.ndarray, sign_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Add two signed quantities held as (log|x|, sign x) pairs, elementwise.

    Returns:
        Tuple of (log|a + b|, sign(a + b))
    """
    stacked = np.stack([log_a, log_b])
    signs = np.stack([sign_a, sign_b]).astype(float)
    return signed_logsumexp(stacked, signs, axis=0)


def signed_logsumexp(log_values: np.ndarray, signs: np.ndarray,
                     weights: Optional[np.ndarray] = None,
                     axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Log of a signed, optionally weighted sum along an axis.

    Args:
        log_values: log|x| per term (may contain -inf)
        signs: sign of each term in {-1, 0, 1}
        weights: nonnegative weights broadcast against the terms
        axis: reduction axis

    Returns:
        Tuple of (log|sum|, sign(sum)); an exact zero sum gives (-inf, 0)
    """
    coeff = np.asarray(signs, dtype=float)
    if weights is not None:
        coeff = coeff * weights
    log_values = np.asarray(log_values, dtype=float)
    coeff = np.broadcast_to(coeff, log_values.shape)
    safe = np.where(coeff == 0.0, -np.inf, log_values)
    with np.errstate(divide='ignore', invalid='ignore'):
        out, sign = logsumexp(safe, axis=axis, b=coeff, return_sign=True)
    sign = np.nan_to_num(np.asarray(sign, dtype=float))
    out = np.where(sign == 0, -np.inf, out)
    return out, sign

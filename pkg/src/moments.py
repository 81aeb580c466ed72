"""
Moment-sequence representation of loss distributions.

A distribution is represented by its first K raw moments E[R^k], held as
(log|m(k)|, sign m(k)) pairs so that high powers of wide supports never overflow.
Continuous kinds are integrated with adaptive Gauss-Kronrod quadrature over the
exponentiated log-integrand, atoms are summed exactly.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import logsumexp

from .distributions import (
    DiscretePMF, GridDensity, LossDistribution, MixtureLoss, ParametricLoss, PointMass
)
from .exceptions import NotASimplexError, ShapeMismatchError, UnboundedSupportError
from .utils import signed_logsumexp

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 64
QUAD_EPSREL = 1e-10
PROBE_POINTS = 1025
GL_ORDER = 8
WEIGHT_TOL = 1e-12


class MomentSequence:
    """
    The first K raw moments of a loss distribution in log domain.

    Attributes:
        log_moments: log|E[(R + offset)^k]| for k = 1..K
        signs: sign of E[(R + offset)^k] (+1 for nonnegative losses)
        scale_b: largest |support endpoint| after the offset, the common overflow-safe scale
        offset: constant added to the loss before taking powers (0 for plain moments)
    """

    def __init__(self, log_moments: Sequence[float], signs: Optional[Sequence[float]] = None,
                 scale_b: float = 1.0, offset: float = 0.0):
        logs = np.array(log_moments, dtype=float).reshape(-1)
        if logs.size == 0:
            raise ShapeMismatchError("A moment sequence needs at least one moment")
        sgn = np.ones_like(logs) if signs is None else np.array(signs, dtype=float).reshape(-1)
        if sgn.shape != logs.shape:
            raise ShapeMismatchError(f"{sgn.size} signs for {logs.size} moments")
        sgn = np.where(np.isneginf(logs), 0.0, np.sign(sgn))
        logs.setflags(write=False)
        sgn.setflags(write=False)
        self.log_moments = logs
        self.signs = sgn
        self.scale_b = float(scale_b)
        self.offset = float(offset)

    @classmethod
    def from_raw(cls, values: Sequence[float], scale_b: float = 1.0, offset: float = 0.0) -> "MomentSequence":
        """Build a sequence from plain raw moments (convenient for small fixtures)."""
        vals = np.array(values, dtype=float)
        with np.errstate(divide='ignore'):
            return cls(np.log(np.abs(vals)), np.sign(vals), scale_b, offset)

    @property
    def k_max(self) -> int:
        return int(self.log_moments.size)

    def __len__(self) -> int:
        return self.k_max

    def raw(self, k: int) -> float:
        """E[(R + offset)^k] for 1-based k; overflows to ±inf for very high orders."""
        if not 1 <= k <= self.k_max:
            raise IndexError(f"Moment order {k} outside 1..{self.k_max}")
        sign = self.signs[k - 1]
        if sign == 0:
            return 0.0
        try:
            return float(sign * math.exp(self.log_moments[k - 1]))
        except OverflowError:
            return float(sign * math.inf)

    def loss_moment(self, k: int) -> float:
        """E[R^k] with the offset removed by binomial expansion."""
        if self.offset == 0.0:
            return self.raw(k)
        c = -self.offset
        total = c ** k
        for j in range(1, k + 1):
            total += math.comb(k, j) * self.raw(j) * c ** (k - j)
        return float(total)

    def first(self, count: int = 5) -> List[float]:
        return [self.loss_moment(k) for k in range(1, min(count, self.k_max) + 1)]

    @property
    def mean(self) -> float:
        return self.loss_moment(1)

    @property
    def variance(self) -> float:
        if self.k_max < 2:
            return 0.0
        m1 = self.raw(1)
        return self.raw(2) - m1 * m1

    def normalized(self, scale: Optional[float] = None) -> np.ndarray:
        """log|m(k)| − k·log(scale); per-index comparisons are unchanged by it."""
        scale = scale or max(self.scale_b, 1.0)
        return self.log_moments - np.arange(1, self.k_max + 1) * math.log(scale)

    def truncated(self, k_max: int) -> "MomentSequence":
        return MomentSequence(self.log_moments[:k_max], self.signs[:k_max], self.scale_b, self.offset)

    def to_dict(self, count: int = 5) -> Dict[str, object]:
        return {"k_max": self.k_max, "scale_b": self.scale_b, "offset": self.offset,
                "first_moments": self.first(count)}

    def __repr__(self):
        head = ", ".join(f"{m:.6g}" for m in self.first(3))
        return f"MomentSequence(K={self.k_max}, m=({head}, ...))"


def log_moments_on_nodes(nodes: np.ndarray, log_weights: np.ndarray,
                         ks: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Signed log of Σ_i exp(log_weights_i)·x_i^k for every k, by log-sum-exp.

    Args:
        nodes: Abscissae x_i (zero entries contribute nothing for k >= 1)
        log_weights: log of nonnegative weights (quadrature weight times density, or mass)
        ks: Moment orders

    Returns:
        Tuple of (log|m(k)|, sign m(k)) arrays
    """
    with np.errstate(divide='ignore'):
        log_abs = np.log(np.abs(nodes))
    base_sign = np.sign(nodes)
    logs = np.empty(ks.size)
    signs = np.empty(ks.size)
    live = np.isfinite(log_weights) & (base_sign != 0)
    log_abs, base_sign, log_weights = log_abs[live], base_sign[live], log_weights[live]
    if log_abs.size == 0:
        return np.full(ks.size, -np.inf), np.zeros(ks.size)
    for idx, k in enumerate(ks):
        term_signs = base_sign ** int(k)
        value, sign = signed_logsumexp(k * log_abs + log_weights, term_signs)
        logs[idx], signs[idx] = float(value), float(sign)
    return logs, signs


def _atomic_log_moments(points: np.ndarray, masses: np.ndarray, ks: np.ndarray, offset: float):
    with np.errstate(divide='ignore'):
        return log_moments_on_nodes(points + offset, np.log(masses), ks)


def _grid_log_moments(d: GridDensity, ks: np.ndarray, offset: float):
    # Composite Gauss-Legendre, exact for the piecewise-linear density up to high order
    nodes, weights = leggauss(GL_ORDER)
    left = d.grid[:-1]
    half = d.step / 2.0
    xs = (left[:, None] + half * (nodes[None, :] + 1.0)).reshape(-1)
    ws = np.tile(half * weights, left.size)
    dens = np.interp(xs, d.grid, d.values)
    with np.errstate(divide='ignore'):
        return log_moments_on_nodes(xs + offset, np.log(dens) + np.log(ws), ks)


def _piece_log_integral(d: LossDistribution, a: float, b: float, ks: np.ndarray,
                        offset: float) -> np.ndarray:
    """log ∫_a^b |x + offset|^k f(x) dx for all k, with x + offset of one sign on [a, b]."""
    probe = np.linspace(a, b, PROBE_POINTS)
    with np.errstate(divide='ignore', invalid='ignore'):
        log_x = np.log(np.abs(probe + offset))
        log_f = np.asarray(d.log_density(probe), dtype=float)
        expo = ks[:, None] * log_x[None, :] + log_f[None, :]
    expo = np.where(np.isnan(expo), -np.inf, expo)
    peak = expo.max(axis=1)
    dead = ~np.isfinite(peak)
    if np.all(dead):
        return np.full(ks.size, -np.inf)
    peak = np.where(dead, 0.0, peak)
    # rescale every component so its integral is O(1); the max-norm error test is then relative
    level = peak + logsumexp(expo - peak[:, None], axis=1) + math.log((b - a) / (PROBE_POINTS - 1))
    level = np.where(np.isfinite(level), level, peak)

    def integrand(x: float) -> np.ndarray:
        y = abs(x + offset)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            lf = float(d.log_density(x))
            if not math.isfinite(lf) or y == 0.0:
                return np.zeros(ks.size)
            val = np.exp(ks * math.log(y) + lf - level)
        return np.where(np.isnan(val), 0.0, val)

    breaks = sorted({float(probe[i]) for i in expo[[0, ks.size // 2, ks.size - 1]].argmax(axis=1)
                     if a < probe[i] < b})
    result, error = integrate.quad_vec(integrand, a, b, epsabs=0.0, epsrel=QUAD_EPSREL,
                                       norm='max', points=breaks or None)
    logger.debug(f"quad_vec on [{a:.6g}, {b:.6g}] for {d!r}: max error {float(np.max(error)):.3g}")
    with np.errstate(divide='ignore'):
        out = np.log(np.clip(result, 0.0, None)) + level
    return np.where(dead, -np.inf, out)


def _continuous_log_moments(d: LossDistribution, ks: np.ndarray, offset: float):
    lo, hi = d.support.lo, d.support.hi
    zero = -offset
    logs, signs = [], []
    if lo < zero:
        logs.append(_piece_log_integral(d, lo, min(hi, zero), ks, offset))
        signs.append((-1.0) ** ks)
    if hi > zero:
        logs.append(_piece_log_integral(d, max(lo, zero), hi, ks, offset))
        signs.append(np.ones(ks.size))
    return signed_logsumexp(np.stack(logs), np.stack(signs), axis=0)


def moment_sequence(d: LossDistribution, k_max: int = DEFAULT_K_MAX, offset: float = 0.0) -> MomentSequence:
    """
    Compute the first k_max raw moments of a compact-support distribution.

    Args:
        d: Distribution with compact support (truncate first otherwise)
        k_max: Number of moments
        offset: Constant added to the loss before taking powers, E[(R + offset)^k]

    Returns:
        MomentSequence of length k_max

    Raises:
        UnboundedSupportError: If d is not compact
    """
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    if not d.is_compact:
        raise UnboundedSupportError(f"{d!r} has unbounded support; truncate it first")

    ks = np.arange(1, k_max + 1, dtype=float)
    scale_b = max(abs(d.support.lo + offset), abs(d.support.hi + offset))

    if isinstance(d, PointMass):
        if d.a + offset == 0.0:
            return MomentSequence.from_raw(np.zeros(k_max), scale_b, offset)
        return _point_sequence(d.a + offset, ks, scale_b, offset)
    if isinstance(d, DiscretePMF):
        logs, signs = _atomic_log_moments(d.points, d.masses, ks, offset)
    elif isinstance(d, GridDensity):
        logs, signs = _grid_log_moments(d, ks, offset)
    elif isinstance(d, MixtureLoss):
        parts = [moment_sequence(c, k_max, offset) for c in d.components]
        return _weighted_mix(parts, d.weights)
    elif isinstance(d, ParametricLoss) and d.is_lattice:
        raise UnboundedSupportError(f"{d!r} has infinitely many atoms; truncate it first")
    else:
        logs, signs = _continuous_log_moments(d, ks, offset)
    return MomentSequence(logs, signs, scale_b, offset)


def _point_sequence(a: float, ks: np.ndarray, scale_b: float, offset: float) -> MomentSequence:
    return MomentSequence(ks * math.log(abs(a)), np.sign(a) ** ks, scale_b, offset)


def comparison_offset(*dists: LossDistribution) -> float:
    """Common shift moving every support to [1, ∞), or 0 when they already are."""
    return max(0.0, 1.0 - min(d.support.lo for d in dists))


def _weighted_mix(seqs: Sequence[MomentSequence], weights: np.ndarray) -> MomentSequence:
    k_sizes = {s.k_max for s in seqs}
    if len(k_sizes) != 1:
        raise ShapeMismatchError(f"Cells carry different moment horizons: {sorted(k_sizes)}")
    offsets = {s.offset for s in seqs}
    if len(offsets) != 1:
        raise ShapeMismatchError(f"Cells carry different moment offsets: {sorted(offsets)}")
    logs = np.stack([s.log_moments for s in seqs])
    signs = np.stack([s.signs for s in seqs])
    w = np.asarray(weights, dtype=float).reshape(-1, 1)
    out, sign = signed_logsumexp(logs, signs, weights=w, axis=0)
    scale_b = max(s.scale_b for s, wt in zip(seqs, w[:, 0]) if wt > 0)
    return MomentSequence(out, sign, scale_b, seqs[0].offset)


def mix_moments(cells: Sequence[Sequence[MomentSequence]], weights) -> MomentSequence:
    """
    Moments of the mixture Σ w_ij F_ij from the cell moment sequences.

    Args:
        cells: n×m matrix of MomentSequence sharing one horizon
        weights: n×m joint cell probabilities

    Returns:
        MomentSequence of the mixture (linear in the weights per raw moment)

    Raises:
        ShapeMismatchError: If the matrices disagree in shape or horizon
        NotASimplexError: If the weights are not a probability matrix
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or len(cells) != w.shape[0] or any(len(row) != w.shape[1] for row in cells):
        raise ShapeMismatchError(
            f"weights of shape {w.shape} do not match a {len(cells)}-row cell matrix"
        )
    if np.any(w < -WEIGHT_TOL) or abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
        raise NotASimplexError(f"cell weights sum to {float(w.sum())!r} or are negative")
    flat = [c for row in cells for c in row]
    return _weighted_mix(flat, np.clip(w, 0.0, None).reshape(-1))


class MomentTable:
    """
    Moment sequences of every cell of a payoff matrix, stacked as (n, m, K) arrays.

    Mixtures over rows, columns or the whole matrix are computed directly on the
    stacked arrays, which is what the fictitious-play loops need.
    """

    def __init__(self, logs: np.ndarray, signs: np.ndarray, scale_b: float, offset: float = 0.0):
        if logs.ndim != 3 or logs.shape != signs.shape:
            raise ShapeMismatchError("moment table arrays must both be (n, m, K)")
        logs.setflags(write=False)
        signs.setflags(write=False)
        self.logs = logs
        self.signs = signs
        self.scale_b = scale_b
        self.offset = float(offset)

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[LossDistribution]], k_max: int = DEFAULT_K_MAX,
                   threads: int = 1, offset: Optional[float] = None) -> "MomentTable":
        """
        Compute all cell moments; identical cells are integrated once.

        Args:
            cells: n×m matrix of compact distributions
            k_max: Moment horizon
            threads: Worker threads for the per-cell quadratures
            offset: Common shift of every cell; by default the one lifting all supports to [1, ∞)
        """
        n, m = len(cells), len(cells[0])
        unique: Dict[LossDistribution, int] = {}
        for row in cells:
            for d in row:
                unique.setdefault(d, len(unique))
        distinct = list(unique)
        if offset is None:
            offset = comparison_offset(*distinct)
        logger.info(f"Computing {k_max} moments for {len(distinct)} distinct cells of a {n}x{m} matrix")
        if threads > 1 and len(distinct) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                seqs = list(pool.map(lambda d: moment_sequence(d, k_max, offset), distinct))
        else:
            seqs = [moment_sequence(d, k_max, offset) for d in distinct]

        logs = np.empty((n, m, k_max))
        signs = np.empty((n, m, k_max))
        for i, row in enumerate(cells):
            for j, d in enumerate(row):
                seq = seqs[unique[d]]
                logs[i, j] = seq.log_moments
                signs[i, j] = seq.signs
        return cls(logs, signs, max(s.scale_b for s in seqs), offset)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.logs.shape[0], self.logs.shape[1]

    @property
    def k_max(self) -> int:
        return self.logs.shape[2]

    def cell(self, i: int, j: int) -> MomentSequence:
        return MomentSequence(self.logs[i, j], self.signs[i, j], self.scale_b, self.offset)

    def mix(self, weights) -> MomentSequence:
        w = np.asarray(weights, dtype=float)
        if w.shape != self.shape:
            raise ShapeMismatchError(f"weights of shape {w.shape} for a {self.shape} table")
        out, sign = signed_logsumexp(self.logs, self.signs, weights=w[:, :, None], axis=(0, 1))
        return MomentSequence(out, sign, self.scale_b, self.offset)

    def row_payoffs(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-row moments Σ_j q_j M_ij, as (n, K) log and sign arrays."""
        return signed_logsumexp(self.logs, self.signs, weights=np.asarray(q)[None, :, None], axis=1)

    def col_payoffs(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-column moments Σ_i p_i M_ij, as (m, K) log and sign arrays."""
        return signed_logsumexp(self.logs, self.signs, weights=np.asarray(p)[:, None, None], axis=0)

    def first_moments(self) -> np.ndarray:
        """Expected losses E[R_ij] as an (n, m) float matrix."""
        return self.signs[:, :, 0] * np.exp(self.logs[:, :, 0]) - self.offset

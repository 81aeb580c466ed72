"""
Brute-force reference computations.

Slow, shortcut-free versions of the moment computation, the preference
decision and the equilibrium search. They share no code path with the
quadrature, the decision cascade or fictitious play, so the test suite can
hold the fast implementations against them.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import linprog

from .copula import CopulaKind
from .distributions import (
    DiscretePMF, LossDistribution, MixtureLoss, PointMass, TruncationPolicy, truncate
)
from .exceptions import IncomparablePairError, IncomparablePayoffsError, TooLargeError
from .game import Game, MixedStrategy, mixed_payoff
from .moments import MomentSequence, comparison_offset, log_moments_on_nodes
from .ordering import DecidedBy, OrderingConfig, PreferenceOutcome, Relation, extreme_index
from .utils import grid_steps, signed_logsumexp, simplex_grid

logger = logging.getLogger(__name__)

MAX_ACTIONS = 3
NODES_PER_CELL = 8


@dataclass(frozen=True)
class OracleConfig:
    """Resolution of the brute-force searches."""
    simplex_resolution: Optional[float] = None
    moment_resolution: int = 65536
    k_max: int = 128
    min_run: int = 4
    moment_tol: float = 1e-9

    def __post_init__(self):
        if self.simplex_resolution is not None:
            grid_steps(self.simplex_resolution)
        if self.moment_resolution < NODES_PER_CELL:
            raise ValueError(f"moment_resolution must be at least {NODES_PER_CELL}")
        if self.k_max < 1 or self.min_run < 1:
            raise ValueError("k_max and min_run must be at least 1")

    def with_overrides(self, **overrides) -> "OracleConfig":
        return replace(self, **overrides)

    def resolution_for(self, actions: int) -> float:
        """Simplex step for a player with the given number of actions."""
        if self.simplex_resolution is not None:
            return self.simplex_resolution
        return 0.01 if actions <= 2 else 0.02


def oracle_moments(d: LossDistribution, cfg: Optional[OracleConfig] = None,
                   offset: float = 0.0) -> MomentSequence:
    """
    Moments E[(R + offset)^k] by composite Gauss-Legendre on a fixed, dense grid.

    Atoms are summed exactly; everything else is integrated from the density
    with cfg.moment_resolution nodes, with no adaptivity.
    """
    cfg = cfg or OracleConfig()
    ks = np.arange(1, cfg.k_max + 1, dtype=float)
    scale_b = max(abs(d.support.lo + offset), abs(d.support.hi + offset))

    if isinstance(d, PointMass):
        logs, signs = log_moments_on_nodes(np.array([d.a + offset]), np.zeros(1), ks)
    elif isinstance(d, DiscretePMF):
        with np.errstate(divide='ignore'):
            logs, signs = log_moments_on_nodes(d.points + offset, np.log(d.masses), ks)
    elif isinstance(d, MixtureLoss) and d.has_atoms:
        parts = [oracle_moments(c, cfg, offset) for c in d.components]
        stacked_logs = np.stack([s.log_moments for s in parts])
        stacked_signs = np.stack([s.signs for s in parts])
        logs, signs = signed_logsumexp(stacked_logs, stacked_signs,
                                       weights=np.asarray(d.weights)[:, None], axis=0)
    else:
        cells = cfg.moment_resolution // NODES_PER_CELL
        nodes, weights = leggauss(NODES_PER_CELL)
        edges = np.linspace(d.support.lo, d.support.hi, cells + 1)
        half = (edges[1:] - edges[:-1]) / 2.0
        xs = (edges[:-1, None] + half[:, None] * (nodes[None, :] + 1.0)).reshape(-1)
        ws = (half[:, None] * weights[None, :]).reshape(-1)
        with np.errstate(divide='ignore'):
            log_w = np.log(ws) + np.asarray(d.log_density(xs), dtype=float)
        logs, signs = log_moments_on_nodes(xs + offset, log_w, ks)
    return MomentSequence(logs, signs, scale_b, offset)


def _raw_scan(s1: MomentSequence, s2: MomentSequence, cfg: OracleConfig) -> Tuple[Relation, Optional[int]]:
    with np.errstate(invalid='ignore'):
        gap = s1.log_moments - s2.log_moments
    same = s1.signs == s2.signs
    cmp = np.where(same, s1.signs * np.sign(np.nan_to_num(gap)), np.sign(s1.signs - s2.signs))
    cmp = np.where(same & ((np.abs(np.nan_to_num(gap)) <= cfg.moment_tol)
                           | (np.isneginf(s1.log_moments) & np.isneginf(s2.log_moments))), 0.0, cmp)

    tail = cmp[-cfg.min_run:]
    if not np.any(tail):
        return Relation.EQUIVALENT, None
    if np.all(tail == tail[-1]):
        start = cmp.size - 1
        while start > 0 and cmp[start - 1] == tail[-1]:
            start -= 1
        relation = Relation.FIRST_PREFERRED if tail[-1] < 0 else Relation.SECOND_PREFERRED
        return relation, start + 1
    return Relation.UNDECIDED, None


def oracle_compare(d1: LossDistribution, d2: LossDistribution,
                   cfg: Optional[OracleConfig] = None) -> PreferenceOutcome:
    """
    Decide d1 against d2 by a raw per-index scan of high-resolution moments.

    Unbounded inputs are truncated with the default policy first; both sides
    are shifted into [1, ∞) by the same constant. The last cfg.min_run indices
    decide: all tied gives Equivalent, one common sign gives a strict
    preference, anything else is Undecided.
    """
    cfg = cfg or OracleConfig()
    if d1 == d2:
        return PreferenceOutcome(Relation.EQUIVALENT, DecidedBy.MOMENT_DOMINANCE)
    policy = TruncationPolicy()
    d1 = d1 if d1.is_compact else truncate(d1, policy)
    d2 = d2 if d2.is_compact else truncate(d2, policy)
    offset = comparison_offset(d1, d2)
    relation, witness = _raw_scan(oracle_moments(d1, cfg, offset), oracle_moments(d2, cfg, offset), cfg)
    logger.debug(f"oracle: {d1!r} vs {d2!r} -> {relation.value} (K={witness})")
    return PreferenceOutcome(relation, DecidedBy.MOMENT_DOMINANCE, witness)


def _payoff_stack(g: Game, fixed: np.ndarray, others: np.ndarray, row_fixed: bool,
                  k_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    logs, signs, means = [], [], []
    for other in others:
        seq = mixed_payoff(g, fixed, other, k_max) if row_fixed else mixed_payoff(g, other, fixed, k_max)
        logs.append(seq.log_moments)
        signs.append(seq.signs)
        means.append(seq.mean)
    return np.array(logs), np.array(signs), np.array(means)


def _extreme(logs: np.ndarray, signs: np.ndarray, means: np.ndarray, cfg: OrderingConfig,
             criterion: str, maximize: bool) -> int:
    if criterion == "expectation":
        return int(np.argmax(means) if maximize else np.argmin(means))
    return extreme_index(logs, signs, cfg, maximize=maximize)


def oracle_equilibrium(g: Game, cfg: Optional[OracleConfig] = None, criterion: str = "moments",
                       k_max: int = 64) -> Tuple[MixedStrategy, MixedStrategy, MomentSequence]:
    """
    Grid minimax and maximin strategies of a small game.

    The row strategy minimizes the ⪯-largest column response over the row
    simplex grid; the column strategy maximizes the ⪯-smallest row response.
    Under a product copula the payoff is linear in the responder's strategy,
    so pure responses are scanned; other copulas scan the responder's grid too.

    Args:
        g: Game with at most 3 actions per player
        cfg: Oracle configuration
        criterion: "moments" (the preference order) or "expectation"
        k_max: Moment horizon

    Returns:
        Tuple of (p, q, value) with value the payoff at (p, q)

    Raises:
        TooLargeError: If either player has more than 3 actions
        IncomparablePayoffsError: If two responses cannot be ordered
    """
    cfg = cfg or OracleConfig()
    n, m = g.shape
    if n > MAX_ACTIONS or m > MAX_ACTIONS:
        raise TooLargeError(f"grid oracle handles at most {MAX_ACTIONS} actions per player, got {n}x{m}")
    ordering = OrderingConfig(k_max=k_max)
    row_grid = simplex_grid(n, cfg.resolution_for(n))
    col_grid = simplex_grid(m, cfg.resolution_for(m))
    product = g.copula.kind is CopulaKind.PRODUCT
    col_responses = np.eye(m) if product else col_grid
    row_responses = np.eye(n) if product else row_grid
    logger.info(f"Grid oracle over {len(row_grid)} row and {len(col_grid)} column strategies")

    try:
        worst = [_payoff_stack(g, p, col_responses, True, k_max) for p in row_grid]
        picks = [_extreme(*stack, ordering, criterion, maximize=True) for stack in worst]
        p_index = _extreme(np.array([s[0][k] for s, k in zip(worst, picks)]),
                           np.array([s[1][k] for s, k in zip(worst, picks)]),
                           np.array([s[2][k] for s, k in zip(worst, picks)]),
                           ordering, criterion, maximize=False)
    except IncomparablePairError as e:
        raise IncomparablePayoffsError(e.i, e.j, "row") from e

    try:
        best = [_payoff_stack(g, q, row_responses, False, k_max) for q in col_grid]
        picks = [_extreme(*stack, ordering, criterion, maximize=False) for stack in best]
        q_index = _extreme(np.array([s[0][k] for s, k in zip(best, picks)]),
                           np.array([s[1][k] for s, k in zip(best, picks)]),
                           np.array([s[2][k] for s, k in zip(best, picks)]),
                           ordering, criterion, maximize=True)
    except IncomparablePairError as e:
        raise IncomparablePayoffsError(e.i, e.j, "column") from e

    p, q = MixedStrategy(row_grid[p_index]), MixedStrategy(col_grid[q_index])
    return p, q, mixed_payoff(g, p, q, k_max)


def scalar_minimax(payoffs) -> Tuple[List[float], List[float], float]:
    """
    Exact mixed equilibrium of a scalar loss matrix by linear programming.

    The row player minimizes Σ p_i A_ij q_j, the column player maximizes it.

    Returns:
        Tuple of (p, q, value)
    """
    a = np.asarray(payoffs, dtype=float)
    n, m = a.shape
    # variables (p_1..p_n, v): minimize v subject to A^T p <= v
    row = linprog(np.r_[np.zeros(n), 1.0],
                  A_ub=np.c_[a.T, -np.ones(m)], b_ub=np.zeros(m),
                  A_eq=np.r_[np.ones(n), 0.0][None, :], b_eq=[1.0],
                  bounds=[(0.0, None)] * n + [(None, None)], method="highs")
    # variables (q_1..q_m, w): maximize w subject to A q >= w
    col = linprog(np.r_[np.zeros(m), -1.0],
                  A_ub=np.c_[-a, np.ones(n)], b_ub=np.zeros(n),
                  A_eq=np.r_[np.ones(m), 0.0][None, :], b_eq=[1.0],
                  bounds=[(0.0, None)] * m + [(None, None)], method="highs")
    if not (row.success and col.success):
        raise RuntimeError(f"linear program failed: {row.message} / {col.message}")
    p = np.clip(row.x[:n], 0.0, None)
    q = np.clip(col.x[:m], 0.0, None)
    return (p / p.sum()).tolist(), (q / q.sum()).tolist(), float(row.x[n])

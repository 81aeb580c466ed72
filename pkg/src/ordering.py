"""
Preference order on loss distributions.

Smaller is better: F1 is preferred over F2 when the moments of F1 are eventually
(for all k beyond some witness index) no larger than those of F2. For compact
supports this is decided by a cascade that looks at the right end of the
support first and falls back to the moment sequences; unbounded supports go
through a density-ratio test and a family of shared truncations.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import LossDistribution, MixtureLoss, PointMass, truncate_at
from .exceptions import BothCompactError, IncomparablePairError, ShapeMismatchError
from .moments import MomentSequence, comparison_offset, moment_sequence

logger = logging.getLogger(__name__)

SURVIVAL_TOL = 1e-9


class Relation(Enum):
    FIRST_PREFERRED = "first_preferred"
    SECOND_PREFERRED = "second_preferred"
    EQUIVALENT = "equivalent"
    UNDECIDED = "undecided"

    def mirrored(self) -> "Relation":
        if self is Relation.FIRST_PREFERRED:
            return Relation.SECOND_PREFERRED
        if self is Relation.SECOND_PREFERRED:
            return Relation.FIRST_PREFERRED
        return self


class DecidedBy(Enum):
    MOMENT_DOMINANCE = "moment_dominance"
    TAIL_DENSITY = "tail_density"
    SUPPORT_ENDPOINT = "support_endpoint"
    RATIO_CRITERION = "ratio_criterion"
    POINT_MASS_RULE = "point_mass_rule"
    TRUNCATION_SEQUENCE = "truncation_sequence"
    FIRST_MOMENT = "first_moment"


@dataclass(frozen=True)
class OrderingConfig:
    """Tolerances and scan sizes of the decision cascade."""
    k_max: int = 64
    moment_tol: float = 1e-9
    density_tol: float = 1e-12
    support_tol: float = 1e-9
    tail_grid: int = 8192
    tail_fraction: float = 0.25
    alternation_limit: int = 8
    equivalence_tail: int = 8
    ratio_c: float = 0.5
    ratio_window: int = 4
    ratio_horizon: float = 2.0 ** 30
    truncation_steps: int = 6

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be positive, got {self.k_max}")
        if not 0.0 < self.ratio_c < 1.0:
            raise ValueError(f"ratio_c must lie in (0, 1), got {self.ratio_c}")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ValueError(f"tail_fraction must lie in (0, 1], got {self.tail_fraction}")
        if self.tail_grid < 2 or self.ratio_window < 2 or self.truncation_steps < 2:
            raise ValueError("tail_grid, ratio_window and truncation_steps must be at least 2")
        if min(self.moment_tol, self.density_tol, self.support_tol) < 0:
            raise ValueError("tolerances must be nonnegative")

    def with_overrides(self, **overrides) -> "OrderingConfig":
        return replace(self, **overrides)

    @property
    def truncation_deltas(self) -> List[float]:
        return [10.0 ** -(3 + n) for n in range(1, self.truncation_steps + 1)]


class PreferenceOutcome:
    """
    Result of comparing two distributions.

    Attributes:
        relation: Which side is preferred (or Equivalent / Undecided)
        strict: True for a strict preference
        decided_by: Cascade rule that produced the relation
        witness_k: 1-based index from which moment dominance holds (moment decisions only)
        details: Rule-specific diagnostics
    """

    def __init__(self, relation: Relation, decided_by: DecidedBy,
                 witness_k: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        self.relation = relation
        self.decided_by = decided_by
        self.witness_k = witness_k if decided_by is DecidedBy.MOMENT_DOMINANCE else None
        self.details = details or {}

    @property
    def strict(self) -> bool:
        return self.relation in (Relation.FIRST_PREFERRED, Relation.SECOND_PREFERRED)

    @property
    def is_decided(self) -> bool:
        return self.relation is not Relation.UNDECIDED

    def mirrored(self) -> "PreferenceOutcome":
        """The same decision with the arguments swapped."""
        return PreferenceOutcome(self.relation.mirrored(), self.decided_by, self.witness_k,
                                 dict(self.details))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "relation": self.relation.value,
            "strict": self.strict,
            "decided_by": self.decided_by.value,
            "witness_k": self.witness_k,
        }

    def __repr__(self):
        witness = f", K={self.witness_k}" if self.witness_k is not None else ""
        return f"PreferenceOutcome({self.relation.value}, {self.decided_by.value}{witness})"


def moment_relation(logs1: np.ndarray, signs1: np.ndarray, logs2: np.ndarray, signs2: np.ndarray,
                    cfg: OrderingConfig) -> Tuple[Relation, Optional[int]]:
    """
    Per-index comparison of two signed log-moment sequences.

    Returns:
        Tuple of (relation, witness_k); witness_k is the 1-based start of the final
        run of constant sign and is None unless the relation is strict
    """
    size = min(len(logs1), len(logs2))
    l1, s1 = np.asarray(logs1[:size]), np.asarray(signs1[:size])
    l2, s2 = np.asarray(logs2[:size]), np.asarray(signs2[:size])

    with np.errstate(invalid='ignore'):
        gap = l1 - l2
    same_sign = s1 == s2
    close = same_sign & ((np.isneginf(l1) & np.isneginf(l2)) | (np.abs(gap) <= cfg.moment_tol))
    cmp = np.where(same_sign, s1 * np.sign(np.nan_to_num(gap)), np.sign(s1 - s2))
    cmp = np.where(close, 0.0, cmp)

    if not np.any(cmp) or not np.any(cmp[-cfg.equivalence_tail:]):
        return Relation.EQUIVALENT, None

    nonzero = np.flatnonzero(cmp)
    values = cmp[nonzero]
    changes = int(np.count_nonzero(values[1:] != values[:-1]))
    if changes >= cfg.alternation_limit:
        return Relation.UNDECIDED, None

    last = values[-1]
    run_start = 0
    flips = np.flatnonzero(values[1:] != values[:-1])
    if flips.size:
        run_start = int(nonzero[flips[-1] + 1])
    relation = Relation.FIRST_PREFERRED if last < 0 else Relation.SECOND_PREFERRED
    return relation, run_start + 1


def compare_moments(s1: MomentSequence, s2: MomentSequence,
                    cfg: Optional[OrderingConfig] = None) -> PreferenceOutcome:
    """Decide the preference between two moment sequences by eventual dominance."""
    cfg = cfg or OrderingConfig()
    if s1.offset != s2.offset:
        raise ShapeMismatchError(f"moment sequences shifted by {s1.offset} and {s2.offset} are not comparable")
    relation, witness = moment_relation(s1.log_moments, s1.signs, s2.log_moments, s2.signs, cfg)
    return PreferenceOutcome(relation, DecidedBy.MOMENT_DOMINANCE, witness)


def compare_expected(s1: MomentSequence, s2: MomentSequence,
                     cfg: Optional[OrderingConfig] = None) -> PreferenceOutcome:
    """Rank two sequences by their first moment only (the expected-loss rule of thumb)."""
    cfg = cfg or OrderingConfig()
    m1, m2 = s1.mean, s2.mean
    if abs(m1 - m2) <= cfg.moment_tol * max(1.0, abs(m1), abs(m2)):
        relation = Relation.EQUIVALENT
    else:
        relation = Relation.FIRST_PREFERRED if m1 < m2 else Relation.SECOND_PREFERRED
    return PreferenceOutcome(relation, DecidedBy.FIRST_MOMENT, details={"means": [m1, m2]})


def _compare_shifted(d1: LossDistribution, d2: LossDistribution,
                     cfg: OrderingConfig) -> PreferenceOutcome:
    # common shift lifting both supports into [1, ∞)
    offset = comparison_offset(d1, d2)
    return compare_moments(moment_sequence(d1, cfg.k_max, offset), moment_sequence(d2, cfg.k_max, offset), cfg)


def _endpoint_tol(cfg: OrderingConfig, *values: float) -> float:
    return cfg.support_tol * max([1.0] + [abs(v) for v in values])


def _point_mass_rule(d1: LossDistribution, d2: LossDistribution,
                     cfg: OrderingConfig) -> PreferenceOutcome:
    if isinstance(d1, PointMass) and isinstance(d2, PointMass):
        if abs(d1.a - d2.a) <= _endpoint_tol(cfg, d1.a, d2.a):
            return PreferenceOutcome(Relation.EQUIVALENT, DecidedBy.POINT_MASS_RULE)
        relation = Relation.FIRST_PREFERRED if d1.a < d2.a else Relation.SECOND_PREFERRED
        return PreferenceOutcome(relation, DecidedBy.POINT_MASS_RULE)

    if not isinstance(d1, PointMass):
        return _point_mass_rule(d2, d1, cfg).mirrored()

    a, e = d1.a, d2.essential_sup()
    tol = _endpoint_tol(cfg, a, e)
    details = {"point": a, "essential_sup": e}
    if a < e - tol:
        return PreferenceOutcome(Relation.FIRST_PREFERRED, DecidedBy.POINT_MASS_RULE, details=details)
    if a > e + tol:
        return PreferenceOutcome(Relation.SECOND_PREFERRED, DecidedBy.POINT_MASS_RULE, details=details)

    fallback = _compare_shifted(d1, d2, cfg)
    if fallback.is_decided:
        return fallback
    logger.debug(f"Point mass {a} ties the essential supremum of {d2!r}; left undecided")
    return PreferenceOutcome(Relation.UNDECIDED, DecidedBy.POINT_MASS_RULE, details=details)


def _support_endpoint_rule(d1: LossDistribution, d2: LossDistribution,
                           cfg: OrderingConfig) -> Optional[PreferenceOutcome]:
    e1, e2 = d1.essential_sup(), d2.essential_sup()
    tol = _endpoint_tol(cfg, e1, e2)
    if abs(e1 - e2) <= tol:
        return None
    relation = Relation.FIRST_PREFERRED if e1 < e2 else Relation.SECOND_PREFERRED
    return PreferenceOutcome(relation, DecidedBy.SUPPORT_ENDPOINT, details={"endpoints": [e1, e2]})


def _atom_tail_rule(d1: LossDistribution, d2: LossDistribution,
                    cfg: OrderingConfig) -> Optional[PreferenceOutcome]:
    if d1.is_discrete and d2.is_discrete:
        if not (hasattr(d1, "points") and hasattr(d2, "points")):
            return None
        atoms = np.union1d(d1.points, d2.points)[::-1]
        for x in atoms:
            m1, m2 = float(d1.density(x)), float(d2.density(x))
            if abs(m1 - m2) > cfg.density_tol:
                relation = Relation.FIRST_PREFERRED if m1 < m2 else Relation.SECOND_PREFERRED
                return PreferenceOutcome(relation, DecidedBy.TAIL_DENSITY, details={"a_star": float(x)})
        return None

    # one side has an atom at the shared endpoint, the other only a density
    atomic, flip = (d1, False) if d1.is_discrete else (d2, True)
    top = atomic.essential_sup()
    if float(atomic.density(top)) <= cfg.density_tol:
        return None
    relation = Relation.SECOND_PREFERRED if not flip else Relation.FIRST_PREFERRED
    return PreferenceOutcome(relation, DecidedBy.TAIL_DENSITY, details={"a_star": top})


def _tail_density_rule(d1: LossDistribution, d2: LossDistribution,
                       cfg: OrderingConfig) -> Optional[PreferenceOutcome]:
    mixed_atoms = [d for d in (d1, d2) if isinstance(d, MixtureLoss) and d.has_atoms and not d.is_discrete]
    if mixed_atoms:
        return None
    if d1.is_discrete or d2.is_discrete:
        return _atom_tail_rule(d1, d2, cfg)

    top = min(d1.essential_sup(), d2.essential_sup())
    bottom = min(d1.support.lo, d2.support.lo)
    xs = np.linspace(top - cfg.tail_fraction * (top - bottom), top, cfg.tail_grid)
    diff = np.asarray(d1.density(xs), dtype=float) - np.asarray(d2.density(xs), dtype=float)
    significant = np.flatnonzero(np.abs(diff) > cfg.density_tol)
    if significant.size == 0:
        return None
    signs = np.sign(diff[significant])
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if changes >= cfg.alternation_limit:
        logger.debug(f"Tail densities cross {changes} times near {top:.6g}; deferring to moments")
        return None
    relation = Relation.FIRST_PREFERRED if signs[-1] < 0 else Relation.SECOND_PREFERRED
    return PreferenceOutcome(relation, DecidedBy.TAIL_DENSITY,
                             details={"a_star": float(xs[significant[-1]]), "crossings": changes})


def compare(d1: LossDistribution, d2: LossDistribution,
            cfg: Optional[OrderingConfig] = None) -> PreferenceOutcome:
    """
    Decide the preference between two loss distributions.

    The first applicable rule wins: point-mass rule, support endpoint, tail
    density, moment dominance. Inputs with unbounded support are handed to
    compare_extended.

    Args:
        d1: First distribution
        d2: Second distribution
        cfg: Ordering configuration

    Returns:
        PreferenceOutcome (Undecided is a value, never an error)
    """
    cfg = cfg or OrderingConfig()
    if d1 is d2:
        return PreferenceOutcome(Relation.EQUIVALENT, DecidedBy.MOMENT_DOMINANCE)
    if not (d1.is_compact and d2.is_compact):
        return compare_extended(d1, d2, cfg)
    if isinstance(d1, PointMass) or isinstance(d2, PointMass):
        return _point_mass_rule(d1, d2, cfg)

    for rule in (_support_endpoint_rule, _tail_density_rule):
        outcome = rule(d1, d2, cfg)
        if outcome is not None:
            logger.debug(f"{d1!r} vs {d2!r}: {outcome!r}")
            return outcome

    outcome = _compare_shifted(d1, d2, cfg)
    logger.debug(f"{d1!r} vs {d2!r}: {outcome!r}")
    return outcome


def _monotone_below(values: np.ndarray, limit: float) -> bool:
    return bool(np.all(values < limit) and np.all(values[1:] <= values[:-1] + 1e-12))


def _ratio_rule(d1: LossDistribution, d2: LossDistribution,
                cfg: OrderingConfig) -> Optional[PreferenceOutcome]:
    if d1.is_discrete or d2.is_discrete:
        return None
    x0 = max(1.0, d1.quantile(0.5), d2.quantile(0.5))
    count = int(math.floor(math.log2(cfg.ratio_horizon / x0))) + 1 if cfg.ratio_horizon > x0 else 0
    if count < cfg.ratio_window:
        return None
    xs = x0 * 2.0 ** np.arange(count)
    with np.errstate(all='ignore'):
        l1 = np.asarray(d1.log_density(xs), dtype=float)
        l2 = np.asarray(d2.log_density(xs), dtype=float)
        keep = ~(np.isneginf(l1) & np.isneginf(l2))
        log_ratio = (l1 - l2)[keep]
    if log_ratio.size < cfg.ratio_window:
        return None
    window = log_ratio[-cfg.ratio_window:]
    log_c = math.log(cfg.ratio_c)
    details = {"x0": x0, "log_ratio_tail": window.tolist()}
    if _monotone_below(window, log_c):
        return PreferenceOutcome(Relation.FIRST_PREFERRED, DecidedBy.RATIO_CRITERION, details=details)
    if _monotone_below(-window, log_c):
        return PreferenceOutcome(Relation.SECOND_PREFERRED, DecidedBy.RATIO_CRITERION, details=details)
    return None


def _shared_bounds(d1: LossDistribution, d2: LossDistribution, delta: float) -> Tuple[float, float]:
    lowers, uppers = [], []
    for d in (d1, d2):
        if d.is_compact:
            lowers.append(d.support.lo)
            uppers.append(d.support.hi)
            continue
        lower_open = not math.isfinite(d.support.lo)
        tail = delta / 4.0 if lower_open else delta / 2.0
        lowers.append(d.lower_quantile(tail) if lower_open else d.support.lo)
        uppers.append(d.upper_quantile(tail))
    return min(lowers), max(uppers)


def _truncation_sequence_rule(d1: LossDistribution, d2: LossDistribution,
                              cfg: OrderingConfig) -> PreferenceOutcome:
    lattice = d1.is_lattice or d2.is_lattice
    steps: List[Dict[str, Any]] = []
    for n, delta in enumerate(cfg.truncation_deltas, start=1):
        a_n, b_n = _shared_bounds(d1, d2, delta)
        shift = 1.0 if lattice else 0.25 * (b_n - a_n)
        for upper in (b_n, b_n + shift):
            outcome = compare(truncate_at(d1, upper, a_n), truncate_at(d2, upper, a_n), cfg)
            steps.append({"n": n, "upper": upper, "relation": outcome.relation.value})

    settled = {step["relation"] for step in steps if step["n"] >= 2}
    if len(settled) == 1:
        relation = Relation(settled.pop())
    else:
        relation = Relation.UNDECIDED
        logger.debug(f"Truncations of {d1!r} and {d2!r} disagree: {sorted(settled)}")
    return PreferenceOutcome(relation, DecidedBy.TRUNCATION_SEQUENCE, details={"steps": steps})


def compare_extended(d1: LossDistribution, d2: LossDistribution,
                     cfg: Optional[OrderingConfig] = None) -> PreferenceOutcome:
    """
    Strict preference for distributions with unbounded support.

    Tries the density-ratio criterion f1/f2 → 0 on a geometric grid first, then
    requires every shared truncation with n >= 2 (two upper-point sequences) to
    give the same relation. Disagreement is reported as Undecided.

    Raises:
        BothCompactError: If both inputs have compact support (use compare)
    """
    cfg = cfg or OrderingConfig()
    if d1.is_compact and d2.is_compact:
        raise BothCompactError("compare_extended needs at least one unbounded support; use compare")
    outcome = _ratio_rule(d1, d2, cfg)
    if outcome is None:
        outcome = _truncation_sequence_rule(d1, d2, cfg)
    logger.debug(f"{d1!r} vs {d2!r} (extended): {outcome!r}")
    return outcome


def min_max(items: Sequence[Any], cfg: Optional[OrderingConfig] = None,
            comparator: Optional[Callable[..., PreferenceOutcome]] = None) -> Tuple[int, int]:
    """
    Indices of the preferred-most and the preferred-least item.

    Args:
        items: Moment sequences (or distributions with comparator=compare)
        cfg: Ordering configuration
        comparator: Pairwise decision function, compare_moments by default

    Returns:
        Tuple of (argmin, argmax); ties go to the lowest index

    Raises:
        IncomparablePairError: If a comparison comes back Undecided
    """
    if not items:
        raise ValueError("min_max needs at least one item")
    cfg = cfg or OrderingConfig()
    comparator = comparator or compare_moments
    best_min = best_max = 0
    for i in range(1, len(items)):
        against_min = comparator(items[i], items[best_min], cfg)
        if not against_min.is_decided:
            raise IncomparablePairError(best_min, i)
        against_max = against_min if best_max == best_min else comparator(items[i], items[best_max], cfg)
        if not against_max.is_decided:
            raise IncomparablePairError(best_max, i)
        if against_min.relation is Relation.FIRST_PREFERRED:
            best_min = i
        if against_max.relation is Relation.SECOND_PREFERRED:
            best_max = i
    return best_min, best_max


def extreme_index(logs: np.ndarray, signs: np.ndarray, cfg: OrderingConfig,
                  maximize: bool = False) -> int:
    """
    min_max over the rows of stacked (count, K) log-moment arrays.

    Raises:
        IncomparablePairError: If two candidates cannot be ordered
    """
    best = 0
    wanted = Relation.SECOND_PREFERRED if maximize else Relation.FIRST_PREFERRED
    for i in range(1, logs.shape[0]):
        relation, _ = moment_relation(logs[i], signs[i], logs[best], signs[best], cfg)
        if relation is Relation.UNDECIDED:
            raise IncomparablePairError(best, i)
        if relation is wanted:
            best = i
    return best


def tail_threshold(d1: LossDistribution, d2: LossDistribution,
                   cfg: Optional[OrderingConfig] = None) -> Optional[float]:
    """
    Smallest scan-grid point x0 with survival(d1, x) <= survival(d2, x) + 1e-9 for all grid x >= x0.

    Returns None when even the last grid point violates the bound.
    """
    cfg = cfg or OrderingConfig()
    lo = min(d1.support.lo, d2.support.lo)
    hi = max(d1.essential_sup(), d2.essential_sup())
    xs = np.linspace(lo, hi, cfg.tail_grid)
    s1 = np.asarray(d1.survival(xs), dtype=float)
    s2 = np.asarray(d2.survival(xs), dtype=float)
    bad = np.flatnonzero(s1 > s2 + SURVIVAL_TOL)
    start = int(bad[-1]) + 1 if bad.size else 0
    return float(xs[start]) if start < xs.size else None

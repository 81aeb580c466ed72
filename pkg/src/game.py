"""
Distribution-valued zero-sum matrix games.

Player 1 (rows) picks the defence and minimizes the loss distribution, the
column player is the adversary maximizing it. Payoffs are mixtures of the cell
distributions under the copula-coupled strategies, compared by the preference
order; the solver is fictitious play driven by best responses alone.
"""

import logging
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .copula import Copula2, CopulaKind, ProductCopula, joint_weights
from .distributions import LossDistribution, TruncationPolicy, truncate, validate_assumption
from .exceptions import (
    GameValidationError, IncomparablePairError, IncomparablePayoffsError, NotConvergedError,
    ShapeMismatchError, UnsupportedCouplingError
)
from .moments import MomentSequence, MomentTable
from .ordering import OrderingConfig, Relation, compare_extended, extreme_index, moment_relation
from .utils import as_simplex, signed_log_add, simplex_grid, unit_vector

logger = logging.getLogger(__name__)

CRITERIA = ("moments", "expectation")


class Side(Enum):
    ROW = "row"
    COLUMN = "column"


class MixedStrategy:
    """A probability vector over a player's actions."""

    def __init__(self, probs: Sequence[float]):
        self.probs = as_simplex(probs)

    @classmethod
    def pure(cls, size: int, index: int) -> "MixedStrategy":
        return cls(unit_vector(size, index))

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(np.full(size, 1.0 / size))

    def __len__(self) -> int:
        return int(self.probs.size)

    def __eq__(self, other):
        if not isinstance(other, MixedStrategy):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def distance(self, other: Union["MixedStrategy", Sequence[float]]) -> float:
        """∞-norm distance to another strategy."""
        theirs = other.probs if isinstance(other, MixedStrategy) else np.asarray(other, dtype=float)
        return float(np.max(np.abs(self.probs - theirs)))

    def to_list(self) -> List[float]:
        return self.probs.tolist()

    def __repr__(self):
        return f"MixedStrategy({np.round(self.probs, 6).tolist()})"


def _probs(strategy: Union[MixedStrategy, Sequence[float]], name: str) -> np.ndarray:
    if isinstance(strategy, MixedStrategy):
        return strategy.probs
    return as_simplex(strategy, name)


@dataclass(frozen=True)
class SolverConfig:
    """Fictitious-play settings."""
    eps: float = 1e-3
    window: int = 100
    max_iters: int = 200000
    min_iters: int = 1000
    k_max: int = 64
    criterion: str = "moments"
    initial_row: int = 0
    initial_col: int = 0
    threads: int = 1
    value_tol: float = 0.02
    strict: bool = False

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got '{self.criterion}'")
        if self.eps <= 0 or self.window < 1 or self.max_iters < 1 or self.min_iters < 0:
            raise ValueError("eps, window and max_iters must be positive")
        if self.k_max < 1 or self.threads < 1:
            raise ValueError("k_max and threads must be at least 1")

    def with_overrides(self, **overrides) -> "SolverConfig":
        return replace(self, **overrides)


class Game:
    """
    Zero-sum game with an n×m matrix of loss distributions.

    Cells with unbounded (or over-wide) support are truncated with the given
    policy at construction; the original models stay available as
    `source_cells` for the extended comparisons.
    """

    def __init__(self, payoffs: Sequence[Sequence[LossDistribution]], copula: Optional[Copula2] = None,
                 row_labels: Optional[Sequence[str]] = None, col_labels: Optional[Sequence[str]] = None,
                 truncation: Optional[TruncationPolicy] = None):
        self.logger = logging.getLogger(__name__)
        rows = [list(row) for row in payoffs]
        if not rows or not rows[0]:
            raise ShapeMismatchError("a game needs at least one row and one column")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise ShapeMismatchError("payoff matrix rows differ in length")

        self.policy = truncation or TruncationPolicy()
        self.copula = copula or ProductCopula()
        self.source_cells = rows
        self.cells = [[self._prepare(d, (i, j)) for j, d in enumerate(row)] for i, row in enumerate(rows)]
        self.row_labels = list(row_labels) if row_labels is not None else [f"r{i}" for i in range(len(rows))]
        self.col_labels = list(col_labels) if col_labels is not None else [f"c{j}" for j in range(width)]
        if len(self.row_labels) != len(rows) or len(self.col_labels) != width:
            raise ShapeMismatchError("label counts do not match the payoff matrix")
        self._tables: Dict[int, MomentTable] = {}

    def _prepare(self, d: LossDistribution, cell: Tuple[int, int]) -> LossDistribution:
        support = d.support
        if not support.is_compact or support.width > self.policy.max_support_cap:
            d = truncate(d, self.policy)
        problems = validate_assumption(d)
        if problems:
            raise GameValidationError(cell, "; ".join(problems))
        return d

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.cells), len(self.cells[0])

    def cell(self, i: int, j: int) -> LossDistribution:
        return self.cells[i][j]

    def moment_table(self, k_max: int = 64, threads: int = 1) -> MomentTable:
        """Moment table of the truncated cells, computed once per horizon."""
        if k_max not in self._tables:
            self._tables[k_max] = MomentTable.from_cells(self.cells, k_max, threads)
        return self._tables[k_max]

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (self.source_cells == other.source_cells and self.copula == other.copula
                and self.row_labels == other.row_labels and self.col_labels == other.col_labels)

    def __hash__(self):
        return hash((tuple(map(tuple, self.source_cells)), self.copula))

    def __repr__(self):
        n, m = self.shape
        return f"Game({n}x{m}, copula={self.copula.kind.value})"


@dataclass
class SolveResult:
    """Outcome of fictitious play: security strategies and the assurance (saddle value)."""
    p_star: MixedStrategy
    q_star: MixedStrategy
    assurance: MomentSequence
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)
    criterion: str = "moments"

    @property
    def final_change(self) -> Optional[float]:
        return self.history[-1] if self.history else None

    def to_dict(self, moments: int = 5) -> Dict[str, Any]:
        return {
            "p_star": self.p_star.to_list(),
            "q_star": self.q_star.to_list(),
            "assurance_moments": self.assurance.first(moments),
            "assurance_log_moments": self.assurance.log_moments.tolist(),
            "assurance_signs": self.assurance.signs.tolist(),
            "assurance_offset": self.assurance.offset,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_change": self.final_change,
            "criterion": self.criterion,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], game: Optional[Game] = None) -> "SolveResult":
        """Rebuild a result; the assurance is recomputed from `game` when no log moments are stored."""
        p_star = MixedStrategy(data["p_star"])
        q_star = MixedStrategy(data["q_star"])
        if "assurance_log_moments" in data:
            assurance = MomentSequence(data["assurance_log_moments"], data.get("assurance_signs"),
                                       offset=data.get("assurance_offset", 0.0))
        elif game is not None:
            assurance = mixed_payoff(game, p_star, q_star)
        else:
            raise ValueError("result data carries no assurance moments and no game was given")
        return cls(p_star, q_star, assurance, int(data.get("iterations", 0)),
                   bool(data.get("converged", True)), criterion=data.get("criterion", "moments"))


def mixed_payoff(g: Game, p, q, k_max: int = 64, threads: int = 1) -> MomentSequence:
    """
    Moments of the outcome distribution Σ_ij F_ij·C_{p,q}(i, j).

    Raises:
        ShapeMismatchError: If the strategies do not fit the matrix
    """
    p, q = _probs(p, "p"), _probs(q, "q")
    n, m = g.shape
    if p.size != n or q.size != m:
        raise ShapeMismatchError(f"strategies of length ({p.size}, {q.size}) for a {n}x{m} game")
    return g.moment_table(k_max, threads).mix(joint_weights(g.copula, p, q))


def best_response(g: Game, against, side: Side, k_max: int = 64,
                  cfg: Optional[OrderingConfig] = None, criterion: str = "moments") -> int:
    """
    Pure best response to a fixed opponent strategy.

    The row player picks the preferred-most row payoff, the column player the
    preferred-least column payoff; ties go to the lowest index. A pure strategy
    on one side fixes the joint weights whatever the copula, so the candidate
    payoffs are plain row or column mixtures.

    Raises:
        IncomparablePayoffsError: If two candidates cannot be ordered
    """
    cfg = cfg or OrderingConfig(k_max=k_max)
    table = g.moment_table(k_max)
    n, m = g.shape
    weights = _probs(against, "against")
    if weights.size != (m if side is Side.ROW else n):
        raise ShapeMismatchError(f"opponent strategy of length {weights.size} for a {n}x{m} game")
    maximize = side is Side.COLUMN

    if criterion == "expectation":
        means = table.first_moments()
        values = means @ weights if side is Side.ROW else weights @ means
        return int(np.argmax(values) if maximize else np.argmin(values))

    logs, signs = table.row_payoffs(weights) if side is Side.ROW else table.col_payoffs(weights)
    try:
        return extreme_index(logs, signs, cfg, maximize=maximize)
    except IncomparablePairError as e:
        raise IncomparablePayoffsError(e.i, e.j, side.value) from e


class CumulativePayoffs:
    """
    Running sums of the candidate payoffs against the opponent's past plays.

    Sums keep the candidates' ranking against the empirical mixture, since all
    candidates share the 1/t factor.
    """

    def __init__(self, candidates: int, k_max: int, criterion: str):
        self.criterion = criterion
        self.logs = np.full((candidates, k_max), -np.inf)
        self.signs = np.zeros((candidates, k_max))
        self.values = np.zeros(candidates)

    def add(self, logs: np.ndarray, signs: np.ndarray, means: np.ndarray) -> None:
        if self.criterion == "expectation":
            self.values += means
        else:
            self.logs, self.signs = signed_log_add(self.logs, self.signs, logs, signs)

    def best(self, cfg: OrderingConfig, maximize: bool) -> int:
        if self.criterion == "expectation":
            return int(np.argmax(self.values) if maximize else np.argmin(self.values))
        return extreme_index(self.logs, self.signs, cfg, maximize=maximize)


class ZeroSumSolver:
    """Fictitious-play solver for distribution-valued zero-sum games."""

    def __init__(self, config: Optional[SolverConfig] = None, ordering: Optional[OrderingConfig] = None):
        self.logger = logging.getLogger(__name__)
        self.config = config or SolverConfig()
        self.ordering = (ordering or OrderingConfig()).with_overrides(k_max=self.config.k_max)

    def preflight(self, g: Game) -> None:
        """
        Compare unbounded source cells sharing a row or column with the extended order.

        Raises:
            IncomparablePayoffsError: If such a pair is Undecided
        """
        n, m = g.shape
        pairs = [((i, j), (k, j), Side.ROW) for j in range(m) for i in range(n) for k in range(i + 1, n)]
        pairs += [((i, j), (i, k), Side.COLUMN) for i in range(n) for j in range(m) for k in range(j + 1, m)]
        for (a, b, side) in pairs:
            d1, d2 = g.source_cells[a[0]][a[1]], g.source_cells[b[0]][b[1]]
            if (d1.is_compact and d2.is_compact) or d1 == d2:
                continue
            outcome = compare_extended(d1, d2, self.ordering)
            if not outcome.is_decided:
                first, second = (a[0], b[0]) if side is Side.ROW else (a[1], b[1])
                self.logger.warning(f"Cells {a} and {b} are not comparable; refusing to solve")
                raise IncomparablePayoffsError(first, second, side.value)

    def solve(self, g: Game) -> SolveResult:
        """
        Run fictitious play until the empirical strategies settle.

        Args:
            g: Game with a product copula

        Returns:
            SolveResult (converged=False when max_iters was hit, unless strict)

        Raises:
            UnsupportedCouplingError: For non-product copulas
            IncomparablePayoffsError: When a best response meets an undecidable pair
            NotConvergedError: In strict mode when the iteration limit is reached
        """
        cfg = self.config
        if g.copula.kind is not CopulaKind.PRODUCT:
            raise UnsupportedCouplingError(
                f"fictitious play needs independent play, got a {g.copula.kind.value} copula"
            )
        n, m = g.shape
        if not (0 <= cfg.initial_row < n and 0 <= cfg.initial_col < m):
            raise ShapeMismatchError(f"initial plays ({cfg.initial_row}, {cfg.initial_col}) outside {n}x{m}")
        if cfg.criterion == "moments":
            self.preflight(g)

        table = g.moment_table(cfg.k_max, cfg.threads)
        means = table.first_moments()
        self.logger.info(f"Solving {g!r} by fictitious play ({cfg.criterion} criterion)")

        rows = CumulativePayoffs(n, cfg.k_max, cfg.criterion)
        cols = CumulativePayoffs(m, cfg.k_max, cfg.criterion)
        row_counts, col_counts = np.zeros(n), np.zeros(m)
        snapshots = deque(maxlen=cfg.window + 1)
        history: List[float] = []
        i, j = cfg.initial_row, cfg.initial_col
        converged = False
        t = 0
        for t in range(1, cfg.max_iters + 1):
            row_counts[i] += 1.0
            col_counts[j] += 1.0
            rows.add(table.logs[:, j], table.signs[:, j], means[:, j])
            cols.add(table.logs[i], table.signs[i], means[i])
            p_bar, q_bar = row_counts / t, col_counts / t
            snapshots.append((p_bar, q_bar))
            if len(snapshots) > cfg.window:
                old_p, old_q = snapshots[0]
                change = max(float(np.max(np.abs(p_bar - old_p))), float(np.max(np.abs(q_bar - old_q))))
                history.append(change)
                if t >= cfg.min_iters and change < cfg.eps:
                    converged = True
                    break
            try:
                i = rows.best(self.ordering, maximize=False)
            except IncomparablePairError as e:
                raise IncomparablePayoffsError(e.i, e.j, Side.ROW.value) from e
            try:
                j = cols.best(self.ordering, maximize=True)
            except IncomparablePairError as e:
                raise IncomparablePayoffsError(e.i, e.j, Side.COLUMN.value) from e
            if t % 10000 == 0:
                self.logger.debug(f"iteration {t}: change {history[-1] if history else float('nan'):.3g}")

        p_star, q_star = MixedStrategy(row_counts / t), MixedStrategy(col_counts / t)
        assurance = table.mix(joint_weights(g.copula, p_star.probs, q_star.probs))
        result = SolveResult(p_star, q_star, assurance, t, converged, history, cfg.criterion)
        if converged:
            self.logger.info(f"Converged after {t} iterations: p*={p_star!r}, q*={q_star!r}")
        else:
            self.logger.warning(f"Fictitious play stopped at max_iters={cfg.max_iters} without converging")
            if cfg.strict:
                raise NotConvergedError(result)
        return result


def solve_zero_sum(g: Game, cfg: Optional[SolverConfig] = None,
                   ordering: Optional[OrderingConfig] = None) -> SolveResult:
    """Security strategies and saddle value of g by fictitious play."""
    return ZeroSumSolver(cfg, ordering).solve(g)


def excess(payoff: MomentSequence, bound: MomentSequence, criterion: str = "moments",
           cfg: Optional[OrderingConfig] = None) -> float:
    """
    How far `payoff` is strictly worse than `bound`; 0 when payoff ⪯ bound.

    Under "moments" the size is the largest per-order log gap (log m(k) − log v(k))/k over
    the last moments, i.e. the relative gap of the effective loss levels m(k)^(1/k).
    Under "expectation" it is the first-moment difference.
    """
    cfg = cfg or OrderingConfig()
    if criterion == "expectation":
        return max(0.0, payoff.mean - bound.mean)
    relation, _ = moment_relation(payoff.log_moments, payoff.signs, bound.log_moments, bound.signs, cfg)
    if relation in (Relation.FIRST_PREFERRED, Relation.EQUIVALENT):
        return 0.0
    size = min(payoff.k_max, bound.k_max)
    tail = np.arange(max(1, size - cfg.equivalence_tail + 1), size + 1)
    with np.errstate(invalid='ignore'):
        gaps = (payoff.log_moments[tail - 1] - bound.log_moments[tail - 1]) / tail
    return float(max(0.0, np.nanmax(gaps)))


def assurance_gap(s1: MomentSequence, s2: MomentSequence, criterion: str = "moments",
                  cfg: Optional[OrderingConfig] = None) -> float:
    """Symmetric distance in excess() units; ≡ within tolerance when it is small."""
    return max(excess(s1, s2, criterion, cfg), excess(s2, s1, criterion, cfg))


@dataclass
class SaddleReport:
    """Worst grid violations of F(p*, q) ⪯ F(p*, q*) ⪯ F(p, q*)."""
    grid_resolution: float
    criterion: str
    row_violation: float
    col_violation: float
    row_witness: Optional[List[float]]
    col_witness: Optional[List[float]]
    points_checked: int
    cross_equivalent: Optional[bool] = None
    cross_gaps: List[float] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max(self.row_violation, self.col_violation)

    def passed(self, tol: float) -> bool:
        return self.worst <= tol and self.cross_equivalent is not False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def verify_saddle(g: Game, r: SolveResult, grid_res: float = 0.05, k_max: Optional[int] = None,
                  cfg: Optional[OrderingConfig] = None, other: Optional[SolveResult] = None,
                  tol: float = 0.02) -> SaddleReport:
    """
    Check the saddle inequalities on simplex grids and report the worst violations.

    Args:
        g: The game
        r: Solved result to check
        grid_res: Simplex grid step
        k_max: Moment horizon (defaults to the result's)
        cfg: Ordering configuration
        other: A second saddle candidate; when given, the four cross payoffs must be ≡
        tol: Tolerance used for the cross-equivalence verdict

    Returns:
        SaddleReport (violations are reported, never raised)
    """
    k_max = k_max or r.assurance.k_max
    cfg = cfg or OrderingConfig(k_max=k_max)
    n, m = g.shape
    value = mixed_payoff(g, r.p_star, r.q_star, k_max)

    row_violation, row_witness = 0.0, None
    row_grid = simplex_grid(n, grid_res)
    for p in row_grid:
        gap = excess(value, mixed_payoff(g, p, r.q_star, k_max), r.criterion, cfg)
        if gap > row_violation:
            row_violation, row_witness = gap, p.tolist()

    col_violation, col_witness = 0.0, None
    col_grid = simplex_grid(m, grid_res)
    for q in col_grid:
        gap = excess(mixed_payoff(g, r.p_star, q, k_max), value, r.criterion, cfg)
        if gap > col_violation:
            col_violation, col_witness = gap, q.tolist()

    report = SaddleReport(grid_res, r.criterion, row_violation, col_violation, row_witness, col_witness,
                          len(row_grid) + len(col_grid))
    if other is not None:
        cross = [
            mixed_payoff(g, r.p_star, other.q_star, k_max),
            mixed_payoff(g, other.p_star, r.q_star, k_max),
            mixed_payoff(g, other.p_star, other.q_star, k_max),
        ]
        report.cross_gaps = [assurance_gap(value, s, r.criterion, cfg) for s in cross]
        report.cross_equivalent = all(gap <= tol for gap in report.cross_gaps)
    logger.info(f"Saddle check at grid {grid_res}: row {row_violation:.3g}, column {col_violation:.3g}")
    return report

"""
Multi-goal security strategies.

A defender facing d loss goals at once plays against d independent
adversaries, one per goal (the one-against-all auxiliary game). The defender's
best response ranks rows by weighted majority over the per-goal preferences;
each adversary maximizes its own goal's loss.
"""

import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .copula import CopulaKind, joint_weights
from .distributions import LossDistribution
from .exceptions import (
    IncomparablePairError, IncomparablePayoffsError, NotConvergedError, ShapeMismatchError,
    UnsupportedCouplingError
)
from .game import (
    CumulativePayoffs, Game, MixedStrategy, Side, SolverConfig, ZeroSumSolver, excess, mixed_payoff
)
from .moments import MomentSequence
from .ordering import OrderingConfig, Relation, moment_relation
from .utils import as_simplex, simplex_grid

logger = logging.getLogger(__name__)

MAJORITY = 0.5
EFFICIENCY_TOL = 1e-9


class MultiGame:
    """d goal games sharing actions, labels and copula."""

    def __init__(self, goals: Sequence[Game], names: Optional[Sequence[str]] = None):
        self.goals = list(goals)
        if not self.goals:
            raise ShapeMismatchError("a multi-goal game needs at least one goal")
        first = self.goals[0]
        for k, goal in enumerate(self.goals[1:], start=1):
            if goal.shape != first.shape:
                raise ShapeMismatchError(f"goal {k} has shape {goal.shape}, goal 0 has {first.shape}")
            if goal.copula != first.copula:
                raise ShapeMismatchError(f"goal {k} uses a different copula than goal 0")
            if goal.row_labels != first.row_labels or goal.col_labels != first.col_labels:
                raise ShapeMismatchError(f"goal {k} labels its actions differently from goal 0")
        self.names = list(names) if names is not None else [f"goal{k}" for k in range(len(self.goals))]
        if len(self.names) != len(self.goals):
            raise ShapeMismatchError("one name per goal is required")

    @property
    def d(self) -> int:
        return len(self.goals)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.goals[0].shape

    @property
    def copula(self):
        return self.goals[0].copula

    def permuted(self, order: Sequence[int]) -> "MultiGame":
        return MultiGame([self.goals[k] for k in order], [self.names[k] for k in order])

    def __eq__(self, other):
        if not isinstance(other, MultiGame):
            return NotImplemented
        return self.goals == other.goals and self.names == other.names

    def __repr__(self):
        n, m = self.shape
        return f"MultiGame(d={self.d}, {n}x{m})"


class AuxiliaryGame:
    """
    The (d+1)-player one-against-all game of a MultiGame.

    Player 0 chooses a row s0 and receives the vector of goal losses; opponent i
    chooses a column s_i and only ever sees goal i, so its payoff depends on
    (s0, s_i) alone.
    """

    def __init__(self, mg: MultiGame):
        self.multigame = mg
        self.defender_actions = mg.shape[0]
        self.opponent_actions = [mg.shape[1]] * mg.d

    @property
    def players(self) -> int:
        return self.multigame.d + 1

    def defender_payoff(self, s0: int, opponents: Sequence[int]) -> List[LossDistribution]:
        if len(opponents) != self.multigame.d:
            raise ShapeMismatchError(f"{len(opponents)} opponent actions for {self.multigame.d} goals")
        return [goal.cell(s0, s_i) for goal, s_i in zip(self.multigame.goals, opponents)]

    def opponent_payoff(self, i: int, s0: int, s_i: int) -> LossDistribution:
        return self.multigame.goals[i].cell(s0, s_i)

    def subgame(self, i: int) -> Game:
        """The zero-sum game opponent i plays against the defender."""
        return self.multigame.goals[i]


def build_auxiliary(mg: MultiGame) -> AuxiliaryGame:
    return AuxiliaryGame(mg)


@dataclass
class AxiomReport:
    """Grid-bounded check of the assurance and efficiency conditions."""
    grid_resolution: float
    tolerance: float
    assurance_violations: List[float]
    attained_gaps: List[float]
    efficiency_failures: List[List[float]] = field(default_factory=list)
    points_checked: int = 0

    @property
    def assurance_holds(self) -> bool:
        return all(v <= self.tolerance for v in self.assurance_violations) and \
            all(g <= self.tolerance for g in self.attained_gaps)

    @property
    def efficiency_holds(self) -> bool:
        return not self.efficiency_failures

    @property
    def holds(self) -> bool:
        return self.assurance_holds and self.efficiency_holds

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["holds"] = self.holds
        return data


@dataclass
class MGSSResult:
    p_star: MixedStrategy
    q_stars: List[MixedStrategy]
    assurance: List[MomentSequence]
    iterations: int
    converged: bool
    weights: List[float]
    axiom_report: Optional[AxiomReport] = None
    history: List[float] = field(default_factory=list)
    criterion: str = "moments"

    def to_dict(self, moments: int = 5) -> Dict[str, Any]:
        return {
            "p_star": self.p_star.to_list(),
            "q_stars": [q.to_list() for q in self.q_stars],
            "assurance_moments": [v.first(moments) for v in self.assurance],
            "assurance_log_moments": [v.log_moments.tolist() for v in self.assurance],
            "assurance_signs": [v.signs.tolist() for v in self.assurance],
            "assurance_offsets": [v.offset for v in self.assurance],
            "iterations": self.iterations,
            "converged": self.converged,
            "weights": self.weights,
            "criterion": self.criterion,
            "axiom_report": self.axiom_report.to_dict() if self.axiom_report else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], game: Optional[MultiGame] = None) -> "MGSSResult":
        """Rebuild a result; assurances are recomputed from `game` when no log moments are stored."""
        p_star = MixedStrategy(data["p_star"])
        q_stars = [MixedStrategy(q) for q in data["q_stars"]]
        if "assurance_log_moments" in data:
            offsets = data.get("assurance_offsets") or [0.0] * len(q_stars)
            signs = data.get("assurance_signs") or [None] * len(q_stars)
            assurance = [MomentSequence(logs, s, offset=c)
                         for logs, s, c in zip(data["assurance_log_moments"], signs, offsets)]
        elif game is not None:
            assurance = [mixed_payoff(goal, p_star, q) for goal, q in zip(game.goals, q_stars)]
        else:
            raise ValueError("result data carries no assurance moments and no game was given")
        weights = data.get("weights") or [1.0 / len(q_stars)] * len(q_stars)
        return cls(p_star, q_stars, assurance, int(data.get("iterations", 0)),
                   bool(data.get("converged", True)), list(weights), criterion=data.get("criterion", "moments"))


def _relation_matrix(cum: CumulativePayoffs, cfg: OrderingConfig) -> np.ndarray:
    """cmp[a, b] = −1 when row a is strictly preferred over row b, +1 for the reverse, 0 for ≡."""
    size = cum.values.size
    cmp = np.zeros((size, size))
    for a in range(size):
        for b in range(a + 1, size):
            if cum.criterion == "expectation":
                x, y = cum.values[a], cum.values[b]
                tie = abs(x - y) <= cfg.moment_tol * max(1.0, abs(x), abs(y))
                value = 0.0 if tie else (-1.0 if x < y else 1.0)
            else:
                relation, _ = moment_relation(cum.logs[a], cum.signs[a], cum.logs[b], cum.signs[b], cfg)
                if relation is Relation.UNDECIDED:
                    raise IncomparablePairError(a, b)
                value = {Relation.FIRST_PREFERRED: -1.0, Relation.SECOND_PREFERRED: 1.0}.get(relation, 0.0)
            cmp[a, b], cmp[b, a] = value, -value
    return cmp


def weighted_majority_choice(relations: Sequence[np.ndarray], weights: np.ndarray) -> int:
    """
    Pick the defender row from per-goal relation matrices.

    Row b beats row a when the weights of the goals where b is strictly preferred
    sum to more than 1/2. A row nobody beats wins; ties and cycles fall back to a
    lexicographic comparison in goal order, then to the lowest index.
    """
    size = relations[0].shape[0]
    beats = sum(w * (cmp < 0) for w, cmp in zip(weights, relations))
    unbeaten = [a for a in range(size) if not np.any(beats[:, a] > MAJORITY)]
    candidates = unbeaten or list(range(size))
    for cmp in relations:
        if len(candidates) == 1:
            break
        candidates = [a for a in candidates if not any(cmp[b, a] < 0 for b in candidates)] or candidates
    return min(candidates)


class MultiGoalSolver:
    """One-against-all fictitious play for multi-goal games."""

    def __init__(self, config: Optional[SolverConfig] = None, ordering: Optional[OrderingConfig] = None,
                 axiom_grid: Optional[float] = 0.05):
        self.logger = logging.getLogger(__name__)
        self.config = config or SolverConfig()
        self.ordering = (ordering or OrderingConfig()).with_overrides(k_max=self.config.k_max)
        self.axiom_grid = axiom_grid

    def solve(self, mg: MultiGame, weights: Optional[Sequence[float]] = None) -> MGSSResult:
        """
        Compute a multi-goal security strategy and its assurance vector.

        Args:
            mg: Multi-goal game with a product copula
            weights: Positive goal weights summing to 1 (uniform by default)

        Returns:
            MGSSResult with the axiom report attached (unless axiom_grid is None); a failed
            axiom check marks the result as not converged

        Raises:
            UnsupportedCouplingError: For non-product copulas
            IncomparablePayoffsError: When a best response meets an undecidable pair
            NotConvergedError: In strict mode when the iteration limit is reached or the axioms fail
        """
        cfg = self.config
        w = as_simplex(weights if weights is not None else np.full(mg.d, 1.0 / mg.d), "weights")
        if w.size != mg.d or np.any(w <= 0):
            raise ValueError(f"need {mg.d} positive goal weights, got {w.tolist()}")
        if mg.copula.kind is not CopulaKind.PRODUCT:
            raise UnsupportedCouplingError(
                f"fictitious play needs independent play, got a {mg.copula.kind.value} copula"
            )
        if cfg.criterion == "moments":
            checker = ZeroSumSolver(cfg, self.ordering)
            for goal in mg.goals:
                checker.preflight(goal)

        n, m = mg.shape
        tables = [goal.moment_table(cfg.k_max, cfg.threads) for goal in mg.goals]
        means = [table.first_moments() for table in tables]
        self.logger.info(f"Solving {mg!r} with weights {w.tolist()} ({cfg.criterion} criterion)")

        defender = [CumulativePayoffs(n, cfg.k_max, cfg.criterion) for _ in tables]
        opponents = [CumulativePayoffs(m, cfg.k_max, cfg.criterion) for _ in tables]
        row_counts = np.zeros(n)
        col_counts = np.zeros((mg.d, m))
        s0 = cfg.initial_row
        plays = [cfg.initial_col] * mg.d
        snapshots = deque(maxlen=cfg.window + 1)
        history: List[float] = []
        converged = False
        t = 0
        for t in range(1, cfg.max_iters + 1):
            row_counts[s0] += 1.0
            for k, table in enumerate(tables):
                col_counts[k, plays[k]] += 1.0
                defender[k].add(table.logs[:, plays[k]], table.signs[:, plays[k]], means[k][:, plays[k]])
                opponents[k].add(table.logs[s0], table.signs[s0], means[k][s0])
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
                if mg.d == 1:
                    s0 = defender[0].best(self.ordering, maximize=False)
                else:
                    relations = [_relation_matrix(cum, self.ordering) for cum in defender]
                    s0 = weighted_majority_choice(relations, w)
            except IncomparablePairError as e:
                raise IncomparablePayoffsError(e.i, e.j, Side.ROW.value) from e
            for k, cum in enumerate(opponents):
                try:
                    plays[k] = cum.best(self.ordering, maximize=True)
                except IncomparablePairError as e:
                    raise IncomparablePayoffsError(e.i, e.j, f"{Side.COLUMN.value} {k}") from e

        p_star = MixedStrategy(row_counts / t)
        q_stars = [MixedStrategy(col_counts[k] / t) for k in range(mg.d)]
        assurance = [table.mix(joint_weights(mg.copula, p_star.probs, q.probs))
                     for table, q in zip(tables, q_stars)]
        result = MGSSResult(p_star, q_stars, assurance, t, converged, w.tolist(),
                            history=history, criterion=cfg.criterion)
        if self.axiom_grid is not None:
            result.axiom_report = check_axioms(mg, result, self.axiom_grid, self.ordering, cfg.value_tol)
            if converged and not result.axiom_report.holds:
                self.logger.warning(f"MGSS window settled after {t} iterations but the axiom check failed; "
                                    f"reporting not converged")
                result.converged = False
        if result.converged:
            self.logger.info(f"MGSS converged after {t} iterations: p*={p_star!r}")
        else:
            if not converged:
                self.logger.warning(f"MGSS fictitious play stopped at max_iters={cfg.max_iters} without converging")
            if cfg.strict:
                raise NotConvergedError(result)
        return result


def solve_mgss(mg: MultiGame, cfg: Optional[SolverConfig] = None,
               scalarization: Optional[Sequence[float]] = None,
               ordering: Optional[OrderingConfig] = None, axiom_grid: Optional[float] = 0.05) -> MGSSResult:
    """Multi-goal security strategy with assurance vector, by one-against-all fictitious play."""
    return MultiGoalSolver(cfg, ordering, axiom_grid).solve(mg, scalarization)


def efficiency_witness(mg: MultiGame, p, assurance: Sequence[MomentSequence], grid_res: float = 0.05,
                       criterion: str = "moments", cfg: Optional[OrderingConfig] = None,
                       threshold: float = EFFICIENCY_TOL) -> Optional[Tuple[int, List[float]]]:
    """
    Look for a grid strategy q that makes some goal strictly worse than its assurance under p.

    Returns:
        (goal index, q) for the first witness found, or None
    """
    k_max = assurance[0].k_max
    cfg = cfg or OrderingConfig(k_max=k_max)
    grid = simplex_grid(mg.shape[1], grid_res)
    for k, (goal, bound) in enumerate(zip(mg.goals, assurance)):
        for q in grid:
            if excess(mixed_payoff(goal, p, q, k_max), bound, criterion, cfg) > threshold:
                return k, q.tolist()
    return None


def check_axioms(mg: MultiGame, r: MGSSResult, grid_res: float = 0.05,
                 cfg: Optional[OrderingConfig] = None, tol: float = 0.02) -> AxiomReport:
    """
    Grid check of the two MGSS conditions in loss form.

    Assurance: u_i(p*, q) ⪯ V_i for every goal i and grid q, and some grid q comes
    within tol of V_i. Efficiency: every grid p away from p* admits a grid q making
    some goal strictly worse than its assurance; grid points without such a q are
    listed in efficiency_failures.
    """
    k_max = r.assurance[0].k_max
    cfg = cfg or OrderingConfig(k_max=k_max)
    n, m = mg.shape
    col_grid = simplex_grid(m, grid_res)

    violations, attained = [], []
    for goal, bound in zip(mg.goals, r.assurance):
        worst, closest = 0.0, np.inf
        for q in col_grid:
            payoff = mixed_payoff(goal, r.p_star, q, k_max)
            worst = max(worst, excess(payoff, bound, r.criterion, cfg))
            closest = min(closest, max(excess(payoff, bound, r.criterion, cfg),
                                       excess(bound, payoff, r.criterion, cfg)))
        violations.append(worst)
        attained.append(float(closest))

    failures = []
    row_grid = simplex_grid(n, grid_res)
    for p in row_grid:
        if r.p_star.distance(p) <= grid_res / 2.0:
            continue
        if efficiency_witness(mg, p, r.assurance, grid_res, r.criterion, cfg) is None:
            failures.append(p.tolist())

    report = AxiomReport(grid_res, tol, violations, attained, failures, len(row_grid) + mg.d * len(col_grid))
    logger.info(f"Axiom check at grid {grid_res}: assurance {report.assurance_holds}, "
                f"efficiency {report.efficiency_holds}")
    return report

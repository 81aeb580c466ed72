"""
Risk report module for the stochastic-order game toolkit.
Compiles decision-support figures from the assurance distribution of a solved
game and writes them as JSON, a text summary or CSV plot data.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .copula import joint_weights
from .distributions import MixtureLoss
from .exceptions import RiskReportError
from .game import Game, SolveResult
from .mgss import MGSSResult, MultiGame
from .moments import MomentSequence

VARIANCE_TOL = 1e-9
PLOT_POINTS = 1024
DEFAULT_QUANTILES = (0.05, 0.95)


@dataclass
class RiskReport:
    """
    Risk figures of an assurance distribution.

    For multi-goal results the top-level figures are None and per_goal holds one
    report per goal.
    """
    expected_loss: Optional[float]
    variance: Optional[float]
    quantile_bounds: List[Tuple[float, float]] = field(default_factory=list)
    per_goal: List["RiskReport"] = field(default_factory=list)
    hotspots: List[Dict[str, Any]] = field(default_factory=list)
    first_moments: List[float] = field(default_factory=list)
    name: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def outcome_distribution(g: Game, p, q) -> MixtureLoss:
    """The explicit mixture Σ_ij C_{p,q}(i, j)·F_ij of the truncated cells."""
    p = p.probs if hasattr(p, "probs") else p
    q = q.probs if hasattr(q, "probs") else q
    w = joint_weights(g.copula, p, q)
    n, m = g.shape
    cells = [g.cell(i, j) for i in range(n) for j in range(m)]
    return MixtureLoss(cells, w.reshape(-1))


def max_loss_cdf(d, x: float, n: int) -> float:
    """P(max of n independent losses <= x) = cdf(x)^n; tends to 0 for any x below the supremum."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return float(d.cdf(x)) ** n


class RiskReporter:
    """Builds risk reports and writes them out."""

    def __init__(self, config_manager=None, quantiles: Sequence[float] = DEFAULT_QUANTILES,
                 plot_points: int = PLOT_POINTS):
        """
        Initialize risk reporter.

        Args:
            config_manager: Configuration manager (provides the output directory), optional
            quantiles: Probability levels for the quantile bounds
            plot_points: Number of grid points in the plot data
        """
        self.config_manager = config_manager
        self.logger = logging.getLogger(__name__)
        levels = sorted(float(a) for a in quantiles)
        if any(not 0.0 < a < 1.0 for a in levels):
            raise RiskReportError(f"quantile levels must lie in (0, 1), got {levels}")
        self.quantiles = levels
        self.plot_points = plot_points

    def _single(self, g: Game, p, q, assurance: MomentSequence, name: Optional[str] = None) -> RiskReport:
        m1 = assurance.mean
        variance = assurance.variance
        if variance < 0.0:
            if variance < -VARIANCE_TOL * max(1.0, m1 * m1):
                self.logger.warning(f"Negative variance {variance:.3g} from moments; clipped to 0")
            variance = 0.0

        outcome = outcome_distribution(g, p, q)
        bounds = [(a, outcome.quantile(a)) for a in self.quantiles]
        q_probs = np.asarray(q.probs if hasattr(q, "probs") else q, dtype=float)
        order = sorted(range(q_probs.size), key=lambda j: (-q_probs[j], j))
        hotspots = [{"column": g.col_labels[j], "index": j, "probability": float(q_probs[j])}
                    for j in order if q_probs[j] > 0.0]
        return RiskReport(m1, variance, bounds, hotspots=hotspots,
                          first_moments=assurance.first(5), name=name)

    def compile_report(self, g: Union[Game, MultiGame], r: Union[SolveResult, MGSSResult]) -> RiskReport:
        """
        Compile risk figures from a solved game.

        Args:
            g: Game or MultiGame that was solved
            r: Matching SolveResult or MGSSResult

        Returns:
            RiskReport

        Raises:
            RiskReportError: If the result does not fit the game or a figure cannot be computed
        """
        try:
            self.logger.info("Compiling risk report")
            if isinstance(g, MultiGame):
                if not isinstance(r, MGSSResult):
                    raise RiskReportError("a multi-goal game needs an MGSS result")
                goals = [self._single(goal, r.p_star, q, v, name)
                         for goal, q, v, name in zip(g.goals, r.q_stars, r.assurance, g.names)]
                return RiskReport(None, None, per_goal=goals)
            if not isinstance(r, SolveResult):
                raise RiskReportError("a single game needs a zero-sum solve result")
            return self._single(g, r.p_star, r.q_star, r.assurance)
        except RiskReportError:
            raise
        except Exception as e:
            self.logger.error(f"Failed to compile risk report: {e}", exc_info=True)
            raise RiskReportError(f"Failed to compile risk report: {e}")

    def plot_frame(self, g: Game, p, q) -> pd.DataFrame:
        """Density and CDF of the outcome mixture on an even grid over its support."""
        outcome = outcome_distribution(g, p, q)
        xs = np.linspace(outcome.support.lo, outcome.support.hi, self.plot_points)
        return pd.DataFrame({
            "x": xs,
            "density": np.asarray(outcome.density(xs), dtype=float),
            "cdf": np.asarray(outcome.cdf(xs), dtype=float),
        })

    def _resolve(self, path: str) -> str:
        """Place relative paths under the configured output directory."""
        if self.config_manager is None or os.path.isabs(path):
            return path
        return os.path.join(self.config_manager.get_output_directory(), path)

    def emit_plot_data(self, g: Union[Game, MultiGame], r: Union[SolveResult, MGSSResult],
                       path: str, goal: int = 0) -> str:
        """
        Write the assurance distribution as CSV with header x,density,cdf.

        Relative paths land in the configured output directory.

        Raises:
            RiskReportError: If the file cannot be written
        """
        if isinstance(g, MultiGame):
            frame = self.plot_frame(g.goals[goal], r.p_star, r.q_stars[goal])
        else:
            frame = self.plot_frame(g, r.p_star, r.q_star)
        try:
            path = self._resolve(path)
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
            self.logger.info(f"Plot data written to: {path}")
            return path
        except OSError as e:
            self.logger.error(f"Failed to write plot data to {path}: {e}", exc_info=True)
            raise RiskReportError(f"{path}: failed to write plot data: {e}")

    def write_report_json(self, report: RiskReport, path: str) -> str:
        try:
            path = self._resolve(path)
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as file:
                json.dump(report.to_dict(), file, indent=2)
            self.logger.info(f"Risk report written to: {path}")
            return path
        except OSError as e:
            self.logger.error(f"Failed to write risk report to {path}: {e}", exc_info=True)
            raise RiskReportError(f"{path}: failed to write risk report: {e}")

    def _report_lines(self, report: RiskReport) -> List[str]:
        lines = []
        if report.name:
            lines.append(f"{report.name}:")
        lines.append(f"Expected loss: {report.expected_loss:.6g}")
        lines.append(f"Variance: {report.variance:.6g}")
        for alpha, value in report.quantile_bounds:
            lines.append(f"{alpha:.0%} quantile: {value:.6g}")
        if report.hotspots:
            spots = ", ".join(f"{h['column']} ({h['probability']:.1%})" for h in report.hotspots)
            lines.append(f"Adversary hotspots: {spots}")
        return lines

    def create_summary_report(self, report: RiskReport) -> str:
        """
        Create a human-readable summary of a risk report.

        Args:
            report: Compiled risk report

        Returns:
            Summary as string
        """
        lines = ["=" * 60, "RISK ASSESSMENT REPORT", "=" * 60, ""]
        lines.append(f"Generated: {datetime.now().isoformat()}")
        lines.append("")
        if report.per_goal:
            for entry in report.per_goal:
                lines.extend(self._report_lines(entry))
                lines.append("")
        else:
            lines.extend(self._report_lines(report))
            lines.append("")
        lines.append("=" * 60)
        self.logger.debug("Summary report created")
        return "\n".join(lines)

"""
Game file parsing module for the stochastic-order game toolkit.
Reads JSON game descriptions into validated Game / MultiGame models and writes them back.
"""

import json
import logging
import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Union

from .copula import copula_from_literal
from .distributions import LossDistribution, TruncationPolicy, from_literal
from .exceptions import (
    CopulaError, GameValidationError, InvalidDistributionError, ParseError, ShapeMismatchError
)
from .game import Game, SolverConfig
from .mgss import MultiGame
from .ordering import OrderingConfig

FORMAT_VERSION = 1
TOP_LEVEL_KEYS = {"version", "copula", "payoffs", "goals", "labels", "solver", "ordering",
                  "truncation", "weights"}
GOAL_KEYS = {"name", "payoffs"}
LABEL_KEYS = {"rows", "columns"}


@dataclass
class GameSpec:
    """A parsed game file: the model plus the overrides it carries."""
    game: Union[Game, MultiGame]
    version: int = FORMAT_VERSION
    solver: Dict[str, Any] = field(default_factory=dict)
    ordering: Dict[str, Any] = field(default_factory=dict)
    weights: Optional[List[float]] = None

    @property
    def is_multigoal(self) -> bool:
        return isinstance(self.game, MultiGame)


def _field_names(cls) -> set:
    return {f.name for f in fields(cls)}


class GameFileParser:
    """Loads and validates JSON game files."""

    def __init__(self, policy: Optional[TruncationPolicy] = None):
        """
        Initialize game file parser.

        Args:
            policy: Truncation policy applied to unbounded cells at load time
        """
        self.policy = policy or TruncationPolicy()
        self.logger = logging.getLogger(__name__)

    def load(self, path: str) -> GameSpec:
        """
        Parse a game file.

        Args:
            path: Path to the JSON game file

        Returns:
            GameSpec with the validated model

        Raises:
            ParseError: On unreadable files, JSON syntax errors or schema violations
            GameValidationError: When a cell fails validation
        """
        try:
            with open(path, 'r', encoding='utf-8') as file:
                text = file.read()
        except OSError as e:
            raise ParseError(path, f"cannot read file: {e}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}:{e.lineno}:{e.colno}", e.msg)

        spec = self.parse_data(data, path)
        self.logger.info(f"Loaded {spec.game!r} from {path}")
        return spec

    def parse_data(self, data: Any, source: str = "<data>") -> GameSpec:
        """Validate an already decoded game document."""
        if not isinstance(data, dict):
            raise ParseError(f"{source} at $", "game file must hold a JSON object")
        unknown = sorted(set(data) - TOP_LEVEL_KEYS)
        if unknown:
            raise ParseError(f"{source} at $.{unknown[0]}", f"unknown field(s) {unknown}")

        version = data.get("version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ParseError(f"{source} at $.version", f"unsupported version {version!r}")
        if ("payoffs" in data) == ("goals" in data):
            raise ParseError(f"{source} at $", "exactly one of 'payoffs' or 'goals' is required")

        try:
            copula = copula_from_literal(data.get("copula", {"kind": "product"}))
        except CopulaError as e:
            raise ParseError(f"{source} at $.copula", str(e))

        rows, columns = self._labels(data.get("labels"), source)
        policy = self._policy(data.get("truncation"), source)
        solver = self._overrides(data.get("solver"), SolverConfig, "solver", source)
        ordering = self._overrides(data.get("ordering"), OrderingConfig, "ordering", source)

        if "payoffs" in data:
            game = self._game(data["payoffs"], "$.payoffs", copula, rows, columns, policy, source)
        else:
            goals = data["goals"]
            if not isinstance(goals, list) or not goals:
                raise ParseError(f"{source} at $.goals", "goals must be a nonempty list")
            games, names = [], []
            for k, entry in enumerate(goals):
                where = f"$.goals[{k}]"
                if isinstance(entry, dict):
                    extra = sorted(set(entry) - GOAL_KEYS)
                    if extra or "payoffs" not in entry:
                        raise ParseError(f"{source} at {where}", "a goal holds 'payoffs' and an optional 'name'")
                    names.append(str(entry.get("name", f"goal{k}")))
                    matrix = entry["payoffs"]
                    where += ".payoffs"
                else:
                    names.append(f"goal{k}")
                    matrix = entry
                games.append(self._game(matrix, where, copula, rows, columns, policy, source, goal=k))
            try:
                game = MultiGame(games, names)
            except ShapeMismatchError as e:
                raise ParseError(f"{source} at $.goals", str(e))

        weights = data.get("weights")
        if weights is not None:
            if not isinstance(weights, list) or not all(isinstance(w, (int, float)) for w in weights):
                raise ParseError(f"{source} at $.weights", "weights must be a list of numbers")
            weights = [float(w) for w in weights]
        return GameSpec(game, version, solver, ordering, weights)

    def _labels(self, labels: Any, source: str):
        if labels is None:
            return None, None
        if not isinstance(labels, dict) or set(labels) - LABEL_KEYS:
            raise ParseError(f"{source} at $.labels", "labels must be an object with 'rows' and 'columns'")
        return labels.get("rows"), labels.get("columns")

    def _policy(self, literal: Any, source: str) -> TruncationPolicy:
        if literal is None:
            return self.policy
        try:
            return TruncationPolicy(**literal)
        except (TypeError, InvalidDistributionError) as e:
            raise ParseError(f"{source} at $.truncation", str(e))

    def _overrides(self, literal: Any, cls, name: str, source: str) -> Dict[str, Any]:
        if literal is None:
            return {}
        if not isinstance(literal, dict):
            raise ParseError(f"{source} at $.{name}", f"{name} overrides must be an object")
        unknown = sorted(set(literal) - _field_names(cls))
        if unknown:
            raise ParseError(f"{source} at $.{name}.{unknown[0]}", f"unknown {name} option(s) {unknown}")
        try:
            cls(**literal)
        except (TypeError, ValueError) as e:
            raise ParseError(f"{source} at $.{name}", str(e))
        return dict(literal)

    def _game(self, matrix: Any, where: str, copula, rows, columns, policy: TruncationPolicy,
              source: str, goal: Optional[int] = None) -> Game:
        if not isinstance(matrix, list) or not matrix or not all(isinstance(r, list) and r for r in matrix):
            raise ParseError(f"{source} at {where}", "payoffs must be a nonempty matrix of distributions")
        if len({len(r) for r in matrix}) != 1:
            raise ParseError(f"{source} at {where}", "payoff rows differ in length")

        cells: List[List[LossDistribution]] = []
        for i, row in enumerate(matrix):
            parsed = []
            for j, literal in enumerate(row):
                cell = (i, j) if goal is None else (goal, i, j)
                try:
                    parsed.append(from_literal(literal))
                except InvalidDistributionError as e:
                    raise GameValidationError(cell, f"{where}[{i}][{j}]: {e}")
            cells.append(parsed)
        try:
            return Game(cells, copula, rows, columns, truncation=policy)
        except GameValidationError as e:
            cell = e.cell if goal is None else (goal,) + tuple(e.cell)
            raise GameValidationError(cell, e.reason)
        except (ShapeMismatchError, InvalidDistributionError) as e:
            raise ParseError(f"{source} at {where}", str(e))


def parse_game(path: str, policy: Optional[TruncationPolicy] = None) -> Union[Game, MultiGame]:
    """Load a game file and return the validated Game or MultiGame."""
    return GameFileParser(policy).load(path).game


def serialize_game(game: Union[Game, MultiGame], solver: Optional[Dict[str, Any]] = None,
                   ordering: Optional[Dict[str, Any]] = None,
                   weights: Optional[List[float]] = None) -> Dict[str, Any]:
    """JSON document that parses back to an equal model."""
    first = game.goals[0] if isinstance(game, MultiGame) else game
    doc: Dict[str, Any] = {
        "version": FORMAT_VERSION,
        "copula": first.copula.to_literal(),
        "labels": {"rows": list(first.row_labels), "columns": list(first.col_labels)},
        "truncation": {"tail_mass_delta": first.policy.tail_mass_delta,
                       "max_support_cap": first.policy.max_support_cap},
    }
    if isinstance(game, MultiGame):
        doc["goals"] = [{"name": name, "payoffs": [[d.to_literal() for d in row] for row in g.source_cells]}
                        for name, g in zip(game.names, game.goals)]
    else:
        doc["payoffs"] = [[d.to_literal() for d in row] for row in game.source_cells]
    if solver:
        doc["solver"] = dict(solver)
    if ordering:
        doc["ordering"] = dict(ordering)
    if weights is not None:
        doc["weights"] = list(weights)
    return doc


def write_game(game: Union[Game, MultiGame], path: str, **extras) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(serialize_game(game, **extras), file, indent=2)
    return path

"""
Bivariate copulas coupling the two players' mixed strategies.

Action orders are fixed by the game file; the cumulative sums of p and q are
fed through C to get the joint cell probabilities by rectangle differences.
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Callable, Dict, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import CopulaError, NegativeRectangleMassError
from .utils import as_simplex

logger = logging.getLogger(__name__)

RECTANGLE_TOL = 1e-12
BOUNDARY_TOL = 1e-9


class CopulaKind(Enum):
    PRODUCT = "product"
    MIN = "min"
    TABLE = "table"


class Copula2(ABC):
    """A bivariate copula C(u, v) on the unit square."""

    kind: CopulaKind

    @abstractmethod
    def evaluate(self, u, v) -> np.ndarray:
        """C(u, v), broadcasting u against v."""

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": self.kind.value}

    def __eq__(self, other):
        if not isinstance(other, Copula2):
            return NotImplemented
        return self.to_literal() == other.to_literal()

    def __hash__(self):
        return hash(self.kind)

    def __repr__(self):
        return f"{type(self).__name__}()"


class ProductCopula(Copula2):
    """Independent play: C(u, v) = u·v."""

    kind = CopulaKind.PRODUCT

    def evaluate(self, u, v) -> np.ndarray:
        return np.asarray(u, dtype=float) * np.asarray(v, dtype=float)


class MinCopula(Copula2):
    """Fréchet–Hoeffding upper bound min(u, v), the comonotone coupling."""

    kind = CopulaKind.MIN

    def evaluate(self, u, v) -> np.ndarray:
        return np.minimum(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


class TabulatedCopula(Copula2):
    """
    Copula tabulated on a uniform N×N grid of the unit square, interpolated bilinearly.

    Values are row-major: values[i][j] = C(i/(N−1), j/(N−1)). The boundary
    conditions are checked to BOUNDARY_TOL and then set exactly, so marginals
    are recovered to rounding precision.
    """

    kind = CopulaKind.TABLE

    def __init__(self, values: Sequence[Sequence[float]]):
        table = np.array(values, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 2:
            raise CopulaError(f"copula table must be a square grid of size >= 2, got {table.shape}")
        if not np.all(np.isfinite(table)):
            raise CopulaError("copula table contains non-finite values")
        size = table.shape[0]
        axis = np.linspace(0.0, 1.0, size)

        edges = {
            "C(u, 0) = 0": table[:, 0],
            "C(0, v) = 0": table[0, :],
            "C(u, 1) = u": table[:, -1] - axis,
            "C(1, v) = v": table[-1, :] - axis,
        }
        for rule, residual in edges.items():
            worst = float(np.max(np.abs(residual)))
            if worst > BOUNDARY_TOL:
                raise CopulaError(f"copula table violates {rule} by {worst:.3g}")
        table[:, 0] = 0.0
        table[0, :] = 0.0
        table[:, -1] = axis
        table[-1, :] = axis

        masses = table[1:, 1:] - table[:-1, 1:] - table[1:, :-1] + table[:-1, :-1]
        if float(masses.min()) < -RECTANGLE_TOL:
            i, j = np.unravel_index(int(np.argmin(masses)), masses.shape)
            raise NegativeRectangleMassError(
                f"copula table assigns mass {float(masses[i, j]):.3g} to grid cell ({i}, {j})"
            )
        if np.any(table > np.minimum.outer(axis, axis) + BOUNDARY_TOL):
            raise CopulaError("copula table exceeds the Fréchet–Hoeffding bound min(u, v)")

        table.setflags(write=False)
        self.values = table
        self.axis = axis
        self._interpolator = RegularGridInterpolator((axis, axis), table, method="linear")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      grid: int = 33) -> "TabulatedCopula":
        """Tabulate a copula function on a grid×grid lattice."""
        axis = np.linspace(0.0, 1.0, grid)
        uu, vv = np.meshgrid(axis, axis, indexing="ij")
        return cls(np.asarray(func(uu, vv), dtype=float))

    @property
    def grid(self) -> int:
        return self.values.shape[0]

    def evaluate(self, u, v) -> np.ndarray:
        uu, vv = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        points = np.stack([np.clip(uu, 0.0, 1.0), np.clip(vv, 0.0, 1.0)], axis=-1)
        return self._interpolator(points.reshape(-1, 2)).reshape(uu.shape)

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "grid": self.grid, "values": self.values.reshape(-1).tolist()}

    def __hash__(self):
        return hash((self.kind, self.values.tobytes()))

    def __repr__(self):
        return f"TabulatedCopula(grid={self.grid})"


def copula_from_literal(literal: Dict[str, Any]) -> Copula2:
    """
    Build a copula from {"kind": "product"} | {"kind": "min"} | {"kind": "table", "grid": N, "values": [...]}.

    Raises:
        CopulaError: On unknown kinds or malformed tables
    """
    if not isinstance(literal, dict) or "kind" not in literal:
        raise CopulaError("copula literal must be an object with a 'kind'")
    kind = literal["kind"]
    allowed = {"product": {"kind"}, "min": {"kind"}, "table": {"kind", "grid", "values"}}
    if kind not in allowed:
        raise CopulaError(f"unknown copula kind '{kind}'")
    unknown = set(literal) - allowed[kind]
    if unknown:
        raise CopulaError(f"unknown field(s) {sorted(unknown)} for copula kind '{kind}'")
    if kind == "product":
        return ProductCopula()
    if kind == "min":
        return MinCopula()
    grid = literal.get("grid")
    values = literal.get("values")
    if not isinstance(grid, int) or not isinstance(values, list) or len(values) != grid * grid:
        raise CopulaError("table copula needs an integer 'grid' and grid*grid 'values'")
    return TabulatedCopula(np.array(values, dtype=float).reshape(grid, grid))


def _prefix(probs: np.ndarray) -> np.ndarray:
    cum = np.concatenate([[0.0], np.cumsum(probs)])
    cum[-1] = 1.0
    return cum


def joint_weights(c: Copula2, p: Sequence[float], q: Sequence[float]) -> np.ndarray:
    """
    Joint cell probabilities w[i][j] = C(P_i, Q_j) − C(P_{i−1}, Q_j) − C(P_i, Q_{j−1}) + C(P_{i−1}, Q_{j−1}).

    Args:
        c: Copula coupling the two strategies
        p: Row strategy (probability vector of length n)
        q: Column strategy (probability vector of length m)

    Returns:
        n×m matrix of nonnegative weights with marginals p and q

    Raises:
        NotASimplexError: If p or q is not a probability vector
        NegativeRectangleMassError: If the copula yields a negative cell mass
    """
    p = as_simplex(p, "p")
    q = as_simplex(q, "q")
    if c.kind is CopulaKind.PRODUCT:
        return np.outer(p, q)

    big_p, big_q = _prefix(p), _prefix(q)
    cum = c.evaluate(big_p[:, None], big_q[None, :])
    w = cum[1:, 1:] - cum[:-1, 1:] - cum[1:, :-1] + cum[:-1, :-1]
    if float(w.min()) < -RECTANGLE_TOL:
        raise NegativeRectangleMassError(f"{c!r} gives cell mass {float(w.min()):.3g}")
    return np.clip(w, 0.0, None)

"""
Loss distribution models for the stochastic-order game toolkit.

Provides parametric families (backed by scipy.stats), discrete pmfs, piecewise-linear
grid densities, point masses and finite mixtures, together with support handling,
truncation of unbounded models and the JSON literal form used in game files.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize, stats

from .exceptions import (
    AlreadyCompactError, DistributionError, InvalidDistributionError, NoDensityError
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

MASS_TOL = 1e-12
GRID_NORM_TOL = 1e-9
DEFAULT_GRID_RESOLUTION = 4096
ATOM_TOL = 1e-12


class DistributionKind(Enum):
    """Representation kinds of a loss distribution."""
    PARAMETRIC = "parametric"
    DISCRETE_PMF = "pmf"
    GRID_DENSITY = "grid"
    POINT_MASS = "point"
    MIXTURE = "mixture"


class Family(Enum):
    """Parametric families; values double as literal kinds."""
    GUMBEL = "gumbel"
    GAMMA = "gamma"
    WEIBULL = "weibull"
    TRUNCATED_NORMAL = "truncnorm"
    UNIFORM = "uniform"
    FRECHET = "frechet"
    CAUCHY = "cauchy"
    POISSON_LIKE = "poisson_like"


FAMILY_PARAMS: Dict[Family, Tuple[str, ...]] = {
    Family.GUMBEL: ("a", "b"),
    Family.GAMMA: ("a", "b"),
    Family.WEIBULL: ("a", "b"),
    Family.TRUNCATED_NORMAL: ("mu", "sigma", "lo", "hi"),
    Family.UNIFORM: ("lo", "hi"),
    Family.FRECHET: ("alpha", "s", "m"),
    Family.CAUCHY: ("loc", "scale"),
    Family.POISSON_LIKE: ("lam", "parity"),
}

# literal kind -> (required fields, optional fields)
LITERAL_FIELDS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "gumbel": (("a", "b"), ("bounds",)),
    "gamma": (("a", "b"), ("bounds",)),
    "weibull": (("a", "b"), ("bounds",)),
    "truncnorm": (("mu", "sigma", "lo", "hi"), ()),
    "uniform": (("lo", "hi"), ()),
    "frechet": (("alpha", "s"), ("m", "bounds")),
    "cauchy": (("loc", "scale"), ("bounds",)),
    "poisson_like": (("lam", "parity"), ()),
    "pmf": (("points", "masses"), ()),
    "grid": (("lo", "hi", "densities"), ()),
    "point": (("a",), ()),
    "mixture": (("components", "weights"), ()),
}


@dataclass(frozen=True)
class Support:
    """Closed support interval [lo, hi] of a loss distribution; hi may be +inf."""
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise InvalidDistributionError(f"Invalid support [{self.lo}, {self.hi}]")

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class TruncationPolicy:
    """How unbounded or overly wide supports are cut down to compact ones."""
    tail_mass_delta: float = 1e-9
    max_support_cap: float = 1e6

    def __post_init__(self):
        if not 0.0 < self.tail_mass_delta < 1.0:
            raise InvalidDistributionError(
                f"tail_mass_delta must lie in (0, 1), got {self.tail_mass_delta}"
            )
        if not self.max_support_cap > 0.0:
            raise InvalidDistributionError(
                f"max_support_cap must be positive, got {self.max_support_cap}"
            )


def _finish(x, out):
    """Return a Python float for scalar input, the array otherwise."""
    if np.ndim(x) == 0:
        return float(np.asarray(out).reshape(()))
    return out


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Quantile level must lie in (0, 1), got {alpha}")
    return alpha


def _bracketed_quantile(cdf: Callable[[float], float], alpha: float, lo: float, hi: float) -> float:
    """inf{x : cdf(x) >= alpha} on [lo, hi] by bracketing root search."""
    if cdf(lo) >= alpha:
        return lo
    xtol = max(1e-9 * (hi - lo), 1e-300)
    x = optimize.brentq(lambda t: cdf(t) - alpha, lo, hi, xtol=xtol)
    if cdf(x) < alpha:
        x = min(hi, x + xtol)
    return float(x)


class LossDistribution(ABC):
    """A nonnegative-loss model with declared support."""

    @property
    @abstractmethod
    def kind(self) -> DistributionKind:
        """Representation kind."""

    @property
    @abstractmethod
    def support(self) -> Support:
        """Declared support interval."""

    @property
    def is_compact(self) -> bool:
        return self.support.is_compact

    @property
    def is_discrete(self) -> bool:
        """True when all mass sits on atoms."""
        return False

    @property
    def is_lattice(self) -> bool:
        """True for discrete models with infinitely many atoms."""
        return False

    @abstractmethod
    def density(self, x: ArrayLike):
        """Density at x (counting-measure density for discrete kinds)."""

    def log_density(self, x: ArrayLike):
        with np.errstate(divide='ignore'):
            return _finish(x, np.log(np.asarray(self.density(x), dtype=float)))

    @abstractmethod
    def cdf(self, x: ArrayLike):
        """Distribution function at x."""

    def survival(self, x: ArrayLike):
        return _finish(x, 1.0 - np.asarray(self.cdf(x), dtype=float))

    @abstractmethod
    def quantile(self, alpha: float) -> float:
        """inf{x : cdf(x) >= alpha}."""

    def upper_quantile(self, tail_mass: float) -> float:
        """Point leaving at most `tail_mass` probability above it."""
        return self.quantile(1.0 - tail_mass)

    def lower_quantile(self, tail_mass: float) -> float:
        return self.quantile(tail_mass)

    def essential_sup(self) -> float:
        return self.support.hi

    @abstractmethod
    def to_literal(self) -> Dict[str, Any]:
        """JSON-ready literal that from_literal turns back into an equal model."""

    def __eq__(self, other):
        if not isinstance(other, LossDistribution):
            return NotImplemented
        return type(self) is type(other) and self.to_literal() == other.to_literal()

    def __hash__(self):
        return hash(json.dumps(self.to_literal(), sort_keys=True))

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_literal())[:120]})"


class ParametricLoss(LossDistribution):
    """
    A scipy.stats-backed parametric family, optionally restricted to [a, b].

    The Gumbel family is the minimum-type extreme value law with density
    (1/b)·exp((x−a)/b − exp((x−a)/b)); Gamma and Weibull take (shape, scale).
    A restriction renormalizes the density by F(b) − F(a).
    """

    def __init__(self, family: Union[Family, str], params: Dict[str, float],
                 bounds: Optional[Tuple[float, float]] = None):
        self.family = Family(family)
        self.params = self._validate_params(self.family, params)
        self._rv = self._frozen()

        if self.family is Family.POISSON_LIKE:
            if bounds is not None:
                raise InvalidDistributionError("Lattice families truncate to a pmf, not to bounds")
            base_lo, base_hi = float(self.params["parity"]), math.inf
        else:
            base_lo, base_hi = (float(v) for v in self._rv.support())

        if bounds is None:
            self._lo, self._hi = base_lo, base_hi
            self._cdf_lo = 0.0
            self._mass = 1.0
            self._truncated = False
        else:
            a, b = float(bounds[0]), float(bounds[1])
            a = max(a, base_lo)
            b = min(b, base_hi)
            if not a < b:
                raise InvalidDistributionError(f"Empty truncation interval [{a}, {b}]")
            self._lo, self._hi = a, b
            self._cdf_lo = float(self._rv.cdf(a))
            upper_sf = float(self._rv.sf(b))
            lower_sf = float(self._rv.sf(a))
            self._mass = lower_sf - upper_sf if self._cdf_lo > 0.5 else float(self._rv.cdf(b)) - self._cdf_lo
            if not self._mass > 0.0:
                raise InvalidDistributionError(
                    f"{self.family.value} has no mass on [{a}, {b}]"
                )
            self._truncated = True
        self._log_mass = math.log(self._mass)
        self._support = Support(self._lo, self._hi)

    @staticmethod
    def _validate_params(family: Family, params: Dict[str, float]) -> Dict[str, float]:
        names = FAMILY_PARAMS[family]
        values = dict(params)
        if family is Family.FRECHET:
            values.setdefault("m", 0.0)
        if family is Family.POISSON_LIKE and values.get("parity") in ("even", "odd"):
            values["parity"] = 0 if values["parity"] == "even" else 1
        missing = [n for n in names if n not in values]
        extra = [n for n in values if n not in names]
        if missing or extra:
            raise InvalidDistributionError(
                f"{family.value} expects parameters {list(names)}, got {sorted(values)}"
            )
        clean = {}
        for name in names:
            try:
                clean[name] = float(values[name])
            except (TypeError, ValueError):
                raise InvalidDistributionError(f"{family.value}: parameter {name} is not a number")
            if not math.isfinite(clean[name]):
                raise InvalidDistributionError(f"{family.value}: parameter {name} is not finite")

        positive = {
            Family.GUMBEL: ("b",),
            Family.GAMMA: ("a", "b"),
            Family.WEIBULL: ("a", "b"),
            Family.TRUNCATED_NORMAL: ("sigma",),
            Family.FRECHET: ("alpha", "s"),
            Family.CAUCHY: ("scale",),
            Family.POISSON_LIKE: ("lam",),
        }.get(family, ())
        for name in positive:
            if clean[name] <= 0.0:
                raise InvalidDistributionError(f"{family.value}: parameter {name} must be positive")
        if family in (Family.UNIFORM, Family.TRUNCATED_NORMAL) and not clean["lo"] < clean["hi"]:
            raise InvalidDistributionError(f"{family.value}: lo must be below hi")
        if family is Family.POISSON_LIKE:
            if clean["parity"] not in (0.0, 1.0):
                raise InvalidDistributionError("poisson_like: parity must be 'even' or 'odd'")
            clean["parity"] = int(clean["parity"])
        return clean

    def _frozen(self):
        p = self.params
        if self.family is Family.GUMBEL:
            return stats.gumbel_l(loc=p["a"], scale=p["b"])
        if self.family is Family.GAMMA:
            return stats.gamma(p["a"], scale=p["b"])
        if self.family is Family.WEIBULL:
            return stats.weibull_min(p["a"], scale=p["b"])
        if self.family is Family.TRUNCATED_NORMAL:
            return stats.truncnorm((p["lo"] - p["mu"]) / p["sigma"], (p["hi"] - p["mu"]) / p["sigma"],
                                   loc=p["mu"], scale=p["sigma"])
        if self.family is Family.UNIFORM:
            return stats.uniform(loc=p["lo"], scale=p["hi"] - p["lo"])
        if self.family is Family.FRECHET:
            return stats.invweibull(p["alpha"], loc=p["m"], scale=p["s"])
        if self.family is Family.CAUCHY:
            return stats.cauchy(loc=p["loc"], scale=p["scale"])
        return stats.poisson(p["lam"])

    @property
    def kind(self) -> DistributionKind:
        return DistributionKind.PARAMETRIC

    @property
    def support(self) -> Support:
        return self._support

    @property
    def is_truncated(self) -> bool:
        return self._truncated

    @property
    def is_discrete(self) -> bool:
        return self.family is Family.POISSON_LIKE

    @property
    def is_lattice(self) -> bool:
        return self.family is Family.POISSON_LIKE

    def _lattice_index(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Poisson count behind lattice point x and whether x is a lattice point."""
        parity = self.params["parity"]
        half = (x - parity) / 2.0
        n = np.round(half)
        on_lattice = (np.abs(half - n) < 1e-9) & (n >= 0)
        return n, on_lattice

    def density(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        if self.is_lattice:
            n, on_lattice = self._lattice_index(xs)
            out = np.where(on_lattice, self._rv.pmf(np.where(on_lattice, n, 0)), 0.0)
            return _finish(x, out)
        inside = self._support.contains(xs)
        with np.errstate(all='ignore'):
            out = np.where(inside, self._rv.pdf(xs) / self._mass, 0.0)
        return _finish(x, out)

    def log_density(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        if self.is_lattice:
            n, on_lattice = self._lattice_index(xs)
            with np.errstate(divide='ignore'):
                out = np.where(on_lattice, self._rv.logpmf(np.where(on_lattice, n, 0)), -np.inf)
            return _finish(x, out)
        inside = self._support.contains(xs)
        with np.errstate(all='ignore'):
            out = np.where(inside, self._rv.logpdf(xs) - self._log_mass, -np.inf)
        return _finish(x, out)

    def cdf(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        if self.is_lattice:
            parity = self.params["parity"]
            n = np.floor((xs - parity) / 2.0)
            out = np.where(xs < parity, 0.0, self._rv.cdf(np.maximum(n, 0)))
            return _finish(x, out)
        raw = (self._rv.cdf(xs) - self._cdf_lo) / self._mass
        out = np.where(xs < self._lo, 0.0, np.where(xs >= self._hi, 1.0, np.clip(raw, 0.0, 1.0)))
        return _finish(x, out)

    def survival(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        if self._truncated or self.is_lattice:
            return super().survival(x)
        # sf keeps precision far out in the right tail
        return _finish(x, self._rv.sf(xs))

    def quantile(self, alpha: float) -> float:
        alpha = _check_alpha(alpha)
        if self.is_lattice:
            return float(2.0 * self._rv.ppf(alpha) + self.params["parity"])
        if not self._truncated:
            return float(self._rv.ppf(alpha))
        value = float(self._rv.ppf(self._cdf_lo + alpha * self._mass))
        return min(max(value, self._lo), self._hi)

    def upper_quantile(self, tail_mass: float) -> float:
        if self.is_lattice:
            return float(2.0 * self._rv.isf(tail_mass) + self.params["parity"])
        if not self._truncated:
            return float(self._rv.isf(tail_mass))
        return super().upper_quantile(tail_mass)

    def lower_quantile(self, tail_mass: float) -> float:
        if self.is_lattice:
            return float(2.0 * self._rv.ppf(tail_mass) + self.params["parity"])
        if not self._truncated:
            return float(self._rv.ppf(tail_mass))
        return super().lower_quantile(tail_mass)

    def to_literal(self) -> Dict[str, Any]:
        literal: Dict[str, Any] = {"kind": self.family.value}
        for name in FAMILY_PARAMS[self.family]:
            value = self.params[name]
            if self.family is Family.POISSON_LIKE and name == "parity":
                literal[name] = "even" if value == 0 else "odd"
            else:
                literal[name] = value
        if self._truncated:
            literal["bounds"] = [self._lo, self._hi]
        return literal


class DiscretePMF(LossDistribution):
    """Finitely many atoms with probability masses."""

    def __init__(self, points: Sequence[float], masses: Sequence[float]):
        pts = np.array(points, dtype=float).reshape(-1)
        ms = np.array(masses, dtype=float).reshape(-1)
        if pts.size == 0 or pts.size != ms.size:
            raise InvalidDistributionError(
                f"pmf needs equally many points and masses, got {pts.size} and {ms.size}"
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ms))):
            raise InvalidDistributionError("pmf points and masses must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidDistributionError("pmf points must be strictly increasing")
        if np.any(ms < 0):
            raise InvalidDistributionError("pmf masses must be nonnegative")
        total = float(ms.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidDistributionError(f"pmf masses sum to {total:.12g}, not 1")
        pts.setflags(write=False)
        ms.setflags(write=False)
        self.points = pts
        self.masses = ms
        cumulative = np.cumsum(ms)
        cumulative[-1] = 1.0
        cumulative.setflags(write=False)
        self._cumulative = cumulative
        self._support = Support(float(pts[0]), float(pts[-1]))

    @property
    def kind(self) -> DistributionKind:
        return DistributionKind.DISCRETE_PMF

    @property
    def support(self) -> Support:
        return self._support

    @property
    def is_discrete(self) -> bool:
        return True

    def _atom_index(self, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = np.clip(np.searchsorted(self.points, xs), 0, self.points.size - 1)
        left = np.clip(idx - 1, 0, self.points.size - 1)
        near = np.where(np.abs(self.points[left] - xs) < np.abs(self.points[idx] - xs), left, idx)
        hit = np.abs(self.points[near] - xs) <= ATOM_TOL * np.maximum(1.0, np.abs(xs))
        return near, hit

    def density(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        near, hit = self._atom_index(xs)
        return _finish(x, np.where(hit, self.masses[near], 0.0))

    def cdf(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, xs, side='right') - 1
        out = np.where(idx < 0, 0.0, self._cumulative[np.clip(idx, 0, None)])
        return _finish(x, out)

    def quantile(self, alpha: float) -> float:
        alpha = _check_alpha(alpha)
        idx = int(np.searchsorted(self._cumulative, alpha, side='left'))
        return float(self.points[min(idx, self.points.size - 1)])

    def essential_sup(self) -> float:
        positive = np.flatnonzero(self.masses > 0)
        return float(self.points[positive[-1]])

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": "pmf", "points": self.points.tolist(), "masses": self.masses.tolist()}


class GridDensity(LossDistribution):
    """
    Piecewise-linear density tabulated on a uniform grid over [lo, hi].

    The table is renormalized at construction so its trapezoid integral is 1,
    which makes the CDF an exact piecewise quadratic.
    """

    def __init__(self, lo: float, hi: float, densities: Sequence[float]):
        lo, hi = float(lo), float(hi)
        raw = np.array(densities, dtype=float).reshape(-1)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise InvalidDistributionError(f"grid bounds must be finite with lo < hi, got [{lo}, {hi}]")
        if raw.size < 2:
            raise InvalidDistributionError("grid needs at least two density values")
        if not np.all(np.isfinite(raw)) or np.any(raw < 0):
            raise InvalidDistributionError("grid densities must be finite and nonnegative")
        grid = np.linspace(lo, hi, raw.size)
        area = float(integrate.trapezoid(raw, grid))
        if not area > 0:
            raise InvalidDistributionError("grid densities integrate to zero")

        self._raw = raw
        self.grid = grid
        self.values = raw / area
        self.step = (hi - lo) / (raw.size - 1)
        cumulative = integrate.cumulative_trapezoid(self.values, grid, initial=0.0)
        self._cumulative = cumulative / cumulative[-1]
        for arr in (self._raw, self.grid, self.values, self._cumulative):
            arr.setflags(write=False)
        self._support = Support(lo, hi)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                      resolution: int = DEFAULT_GRID_RESOLUTION) -> "GridDensity":
        """Tabulate a (possibly unnormalized) density function on `resolution` points."""
        grid = np.linspace(lo, hi, resolution)
        return cls(lo, hi, np.asarray(func(grid), dtype=float))

    @property
    def kind(self) -> DistributionKind:
        return DistributionKind.GRID_DENSITY

    @property
    def support(self) -> Support:
        return self._support

    def density(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        return _finish(x, np.interp(xs, self.grid, self.values, left=0.0, right=0.0))

    def cdf(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        lo, hi = self._support.lo, self._support.hi
        i = np.clip(np.floor((xs - lo) / self.step).astype(int), 0, self.grid.size - 2)
        t = xs - self.grid[i]
        f0 = self.values[i]
        f1 = self.values[i + 1]
        inner = self._cumulative[i] + f0 * t + (f1 - f0) * t * t / (2.0 * self.step)
        out = np.where(xs < lo, 0.0, np.where(xs >= hi, 1.0, np.clip(inner, 0.0, 1.0)))
        return _finish(x, out)

    def quantile(self, alpha: float) -> float:
        alpha = _check_alpha(alpha)
        return _bracketed_quantile(self.cdf, alpha, self._support.lo, self._support.hi)

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": "grid", "lo": self._support.lo, "hi": self._support.hi,
                "densities": self._raw.tolist()}


class PointMass(LossDistribution):
    """Deterministic loss a (a >= 1); has moments a^k but no density."""

    def __init__(self, a: float):
        a = float(a)
        if not math.isfinite(a) or a < 1.0:
            raise InvalidDistributionError(f"point mass must sit at a finite a >= 1, got {a}")
        self.a = a
        self._support = Support(a, a)

    @property
    def kind(self) -> DistributionKind:
        return DistributionKind.POINT_MASS

    @property
    def support(self) -> Support:
        return self._support

    @property
    def is_discrete(self) -> bool:
        return True

    def density(self, x: ArrayLike):
        raise NoDensityError(f"Point mass at {self.a} has no density")

    def log_density(self, x: ArrayLike):
        raise NoDensityError(f"Point mass at {self.a} has no density")

    def cdf(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        return _finish(x, np.where(xs >= self.a, 1.0, 0.0))

    def quantile(self, alpha: float) -> float:
        _check_alpha(alpha)
        return self.a

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": "point", "a": self.a}


class MixtureLoss(LossDistribution):
    """
    Finite mixture Σ w_i F_i, the outcome law of a mixed strategy profile.

    The density sums the continuous components only; atoms of discrete
    components show up in the CDF.
    """

    def __init__(self, components: Sequence[LossDistribution], weights: Sequence[float]):
        ws = np.array(weights, dtype=float).reshape(-1)
        if len(components) == 0 or len(components) != ws.size:
            raise InvalidDistributionError("mixture needs one weight per component")
        if np.any(ws < -MASS_TOL) or abs(float(ws.sum()) - 1.0) > 1e-9:
            raise InvalidDistributionError("mixture weights must be a probability vector")
        keep = [k for k in range(ws.size) if ws[k] > 0]
        self.components: List[LossDistribution] = [components[k] for k in keep]
        self.weights = ws[keep] / ws[keep].sum()
        self.weights.setflags(write=False)
        self._support = Support(min(c.support.lo for c in self.components),
                                max(c.support.hi for c in self.components))

    @property
    def kind(self) -> DistributionKind:
        return DistributionKind.MIXTURE

    @property
    def support(self) -> Support:
        return self._support

    @property
    def is_discrete(self) -> bool:
        return all(c.is_discrete for c in self.components)

    @property
    def has_atoms(self) -> bool:
        return any(c.is_discrete for c in self.components)

    def density(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        out = np.zeros_like(xs, dtype=float)
        for w, comp in zip(self.weights, self.components):
            if not comp.is_discrete:
                out = out + w * np.asarray(comp.density(xs), dtype=float)
        return _finish(x, out)

    def cdf(self, x: ArrayLike):
        xs = np.asarray(x, dtype=float)
        out = np.zeros_like(xs, dtype=float)
        for w, comp in zip(self.weights, self.components):
            out = out + w * np.asarray(comp.cdf(xs), dtype=float)
        return _finish(x, np.clip(out, 0.0, 1.0))

    def quantile(self, alpha: float) -> float:
        alpha = _check_alpha(alpha)
        if not self.is_compact:
            raise DistributionError("Quantiles of an unbounded mixture need truncated components")
        return _bracketed_quantile(self.cdf, alpha, self._support.lo, self._support.hi)

    def essential_sup(self) -> float:
        return max(c.essential_sup() for c in self.components)

    def to_literal(self) -> Dict[str, Any]:
        return {"kind": "mixture", "components": [c.to_literal() for c in self.components],
                "weights": self.weights.tolist()}


def from_literal(literal: Dict[str, Any]) -> LossDistribution:
    """
    Build a distribution from its JSON literal.

    Args:
        literal: Mapping with a "kind" field and the kind's parameters

    Returns:
        The constructed distribution

    Raises:
        InvalidDistributionError: On unknown kinds, unknown fields or invalid values
    """
    if not isinstance(literal, dict) or "kind" not in literal:
        raise InvalidDistributionError("distribution literal must be an object with a 'kind'")
    kind = literal["kind"]
    if kind not in LITERAL_FIELDS:
        raise InvalidDistributionError(f"unknown distribution kind '{kind}'")
    required, optional = LITERAL_FIELDS[kind]
    unknown = [k for k in literal if k != "kind" and k not in required and k not in optional]
    if unknown:
        raise InvalidDistributionError(f"unknown field(s) {unknown} for kind '{kind}'")
    missing = [k for k in required if k not in literal]
    if missing:
        raise InvalidDistributionError(f"missing field(s) {missing} for kind '{kind}'")

    if kind == "pmf":
        return DiscretePMF(literal["points"], literal["masses"])
    if kind == "grid":
        return GridDensity(literal["lo"], literal["hi"], literal["densities"])
    if kind == "point":
        return PointMass(literal["a"])
    if kind == "mixture":
        return MixtureLoss([from_literal(c) for c in literal["components"]], literal["weights"])

    params = {k: v for k, v in literal.items() if k not in ("kind", "bounds")}
    bounds = literal.get("bounds")
    if bounds is not None and (not isinstance(bounds, (list, tuple)) or len(bounds) != 2):
        raise InvalidDistributionError("bounds must be a pair [a, b]")
    return ParametricLoss(Family(kind), params, bounds=tuple(bounds) if bounds is not None else None)


def _truncate_lattice(d: ParametricLoss, a: float, b: float) -> DiscretePMF:
    parity = d.params["parity"]
    first = max(0, int(math.ceil((a - parity) / 2.0)))
    last = int(math.floor((b - parity) / 2.0))
    if last < first:
        raise InvalidDistributionError(f"No lattice points of {d!r} inside [{a}, {b}]")
    counts = np.arange(first, last + 1)
    masses = d._rv.pmf(counts)
    masses = masses / masses.sum()
    return DiscretePMF(parity + 2.0 * counts, masses)


def truncate(d: LossDistribution, policy: Optional[TruncationPolicy] = None) -> LossDistribution:
    """
    Restrict an unbounded (or overly wide) distribution to a compact support.

    The upper point b leaves tail mass δ/2 above it (δ/4 on each side when the
    lower support is unbounded too, with a the lower δ/4 quantile); otherwise
    a is the declared lower support point. The result has density f/(F(b) − F(a))
    on [a, b] and its CDF deviates from the original by less than δ there.

    Args:
        d: Distribution to truncate
        policy: Truncation policy (defaults to TruncationPolicy())

    Returns:
        Compact-support distribution

    Raises:
        AlreadyCompactError: If the support is already compact and within the cap
    """
    policy = policy or TruncationPolicy()
    support = d.support
    if support.is_compact and support.width <= policy.max_support_cap:
        raise AlreadyCompactError(f"{d!r} already has compact support [{support.lo}, {support.hi}]")

    delta = policy.tail_mass_delta
    if isinstance(d, ParametricLoss):
        lower_open = not math.isfinite(support.lo)
        tail = delta / 4.0 if lower_open else delta / 2.0
        a = d.lower_quantile(tail) if lower_open else support.lo
        b = d.upper_quantile(tail) if not math.isfinite(support.hi) else support.hi
    else:
        a, b = support.lo, support.hi

    if b - a > policy.max_support_cap:
        logger.warning(
            f"Truncation of {d!r} capped at width {policy.max_support_cap:g}; "
            f"tail mass beyond the cap exceeds the policy delta"
        )
        b = a + policy.max_support_cap

    result = truncate_at(d, b, a)
    logger.debug(f"Truncated {d!r} to [{result.support.lo:.6g}, {result.support.hi:.6g}]")
    return result


def truncate_at(d: LossDistribution, upper: float, lower: Optional[float] = None) -> LossDistribution:
    """
    Restrict d to [lower, upper] (lower defaults to the support's lower end).

    Compact inputs already inside the interval come back unchanged.
    """
    support = d.support
    a = support.lo if lower is None else max(float(lower), support.lo)
    b = min(float(upper), support.hi)
    if a == support.lo and b == support.hi and support.is_compact:
        return d
    if not math.isfinite(a):
        raise InvalidDistributionError(f"Cannot truncate {d!r} without a finite lower point")

    if isinstance(d, ParametricLoss):
        if d.is_lattice:
            return _truncate_lattice(d, a, b)
        return ParametricLoss(d.family, d.params, bounds=(a, b))
    if isinstance(d, DiscretePMF):
        keep = (d.points >= a) & (d.points <= b)
        if not np.any(keep & (d.masses > 0)):
            raise InvalidDistributionError(f"No atoms of {d!r} inside [{a}, {b}]")
        masses = d.masses[keep]
        return DiscretePMF(d.points[keep], masses / masses.sum())
    if isinstance(d, GridDensity):
        grid = np.linspace(a, b, d.grid.size)
        return GridDensity(a, b, d.density(grid))
    if isinstance(d, PointMass):
        if a <= d.a <= b:
            return d
        raise InvalidDistributionError(f"Point mass at {d.a} lies outside [{a}, {b}]")
    raise DistributionError(f"Cannot truncate a {d.kind.value} distribution directly")


def validate_assumption(d: LossDistribution, strict: bool = False) -> List[str]:
    """
    List the ways d falls short of the compact-support model class.

    Args:
        d: Distribution to check
        strict: Also require losses normalized to lo >= 1

    Returns:
        Human-readable problems; empty when d qualifies
    """
    problems = []
    support = d.support
    if not support.is_compact:
        problems.append(f"support [{support.lo}, {support.hi}] is not compact")
    elif strict and support.lo < 1.0:
        problems.append(f"support starts at {support.lo} < 1")
    if isinstance(d, GridDensity):
        area = float(integrate.trapezoid(d.values, d.grid))
        if abs(area - 1.0) > GRID_NORM_TOL:
            problems.append(f"grid density integrates to {area:.12g}")
    if isinstance(d, DiscretePMF) and abs(float(d.masses.sum()) - 1.0) > MASS_TOL:
        problems.append("pmf masses do not sum to 1")
    if d.is_lattice:
        problems.append("lattice model with infinitely many atoms")
    return problems

"""
Unit tests for distributions module.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from src.distributions import (
    DiscretePMF, GridDensity, MixtureLoss, ParametricLoss, PointMass, TruncationPolicy,
    from_literal, truncate, truncate_at, validate_assumption
)
from src.exceptions import (
    AlreadyCompactError, InvalidDistributionError, NoDensityError
)
from tests.conftest import gumbel


class TestParametricLoss:
    """Test cases for scipy-backed parametric families."""

    def test_gumbel_is_minimum_type(self):
        """Test that the Gumbel family has mean a - γb and a heavy lower tail."""
        d = gumbel(31.0063, 1.74346)
        assert d.support.lo == -math.inf
        assert d.quantile(0.5) == pytest.approx(31.0063 + 1.74346 * math.log(math.log(2.0)), rel=1e-9)

    def test_invalid_parameters(self):
        """Test that nonpositive scales and missing parameters are rejected."""
        with pytest.raises(InvalidDistributionError):
            ParametricLoss("gumbel", {"a": 1.0, "b": 0.0})
        with pytest.raises(InvalidDistributionError):
            ParametricLoss("gamma", {"a": 2.0})

    def test_restricted_density_integrates_to_one(self):
        """Test that a restriction renormalizes the density."""
        d = ParametricLoss("weibull", {"a": 2.0, "b": 3.0}, bounds=(1.0, 4.0))
        xs = np.linspace(1.0, 4.0, 20001)
        assert integrate.trapezoid(d.density(xs), xs) == pytest.approx(1.0, abs=1e-6)
        assert d.cdf(4.0) == 1.0
        assert d.cdf(0.5) == 0.0

    def test_poisson_like_parity(self):
        """Test that the even and odd lattice models put mass on their own parity only."""
        even = ParametricLoss("poisson_like", {"lam": 3.0, "parity": "even"})
        odd = ParametricLoss("poisson_like", {"lam": 3.0, "parity": "odd"})
        assert even.density(4.0) > 0.0 and even.density(5.0) == 0.0
        assert odd.density(5.0) > 0.0 and odd.density(4.0) == 0.0
        assert even.is_lattice and not even.is_compact


class TestDiscreteKinds:
    """Test cases for pmfs, grid densities and point masses."""

    def test_pmf_mass_check(self):
        """Test that masses summing to 0.9 are rejected."""
        with pytest.raises(InvalidDistributionError, match="sum"):
            DiscretePMF([1.0, 2.0], [0.4, 0.5])

    def test_pmf_essential_sup_skips_zero_atoms(self):
        """Test that the essential supremum is the largest atom with positive mass."""
        d = DiscretePMF([1.0, 2.0, 3.0], [0.5, 0.5, 0.0])
        assert d.essential_sup() == 2.0
        assert d.support.hi == 3.0

    def test_pmf_quantile(self):
        """Test the generalized inverse on atoms."""
        d = DiscretePMF([1.0, 2.0, 3.0], [0.2, 0.3, 0.5])
        assert d.quantile(0.2) == 1.0
        assert d.quantile(0.21) == 2.0
        assert d.quantile(0.95) == 3.0

    def test_grid_quantile_matches_inverse(self):
        """Test a linear grid density against its closed-form inverse CDF."""
        d = GridDensity.from_function(lambda x: x - 1.0, 1.0, 2.0, resolution=1001)
        assert d.quantile(0.95) == pytest.approx(1.0 + math.sqrt(0.95), abs=1e-6)
        assert d.cdf(1.5) == pytest.approx(0.25, abs=1e-12)

    def test_grid_renormalizes(self):
        """Test that an unnormalized table is rescaled to unit area."""
        d = GridDensity(1.0, 3.0, [2.0, 2.0, 2.0])
        assert d.density(2.0) == pytest.approx(0.5)

    def test_point_mass(self):
        """Test point-mass bounds and the missing density."""
        d = PointMass(2.5)
        assert d.quantile(0.3) == 2.5
        assert d.cdf(2.5) == 1.0
        with pytest.raises(NoDensityError):
            d.density(2.5)
        with pytest.raises(InvalidDistributionError):
            PointMass(0.5)

    def test_mixture_cdf_and_density(self):
        """Test that mixtures weight the component CDFs and densities."""
        u = ParametricLoss("uniform", {"lo": 1.0, "hi": 3.0})
        mix = MixtureLoss([u, PointMass(2.0)], [0.5, 0.5])
        assert mix.cdf(2.0) == pytest.approx(0.5 * 0.5 + 0.5)
        assert mix.density(1.5) == pytest.approx(0.25)
        assert mix.has_atoms and not mix.is_discrete


class TestLiterals:
    """Test cases for the JSON literal form."""

    def test_literal_round_trip(self):
        """Test that every kind turns back into an equal model."""
        models = [
            gumbel(1.0, 2.0),
            ParametricLoss("gamma", {"a": 2.0, "b": 1.5}, bounds=(0.5, 9.0)),
            ParametricLoss("poisson_like", {"lam": 2.0, "parity": "odd"}),
            DiscretePMF([1.0, 4.0], [0.25, 0.75]),
            GridDensity(1.0, 2.0, [1.0, 2.0, 1.0]),
            PointMass(3.0),
        ]
        for d in models:
            assert from_literal(d.to_literal()) == d

    def test_unknown_kind_and_field(self):
        """Test that unknown kinds and unknown fields are rejected."""
        with pytest.raises(InvalidDistributionError, match="unknown distribution kind"):
            from_literal({"kind": "lognormal", "mu": 1.0})
        with pytest.raises(InvalidDistributionError, match="unknown field"):
            from_literal({"kind": "point", "a": 2.0, "b": 1.0})


class TestTruncation:
    """Test cases for truncate and truncate_at."""

    def test_gumbel_truncation_tail_mass(self):
        """Test that truncation leaves at most δ/4 below and δ/2 above."""
        d = gumbel(31.0063, 1.74346)
        t = truncate(d, TruncationPolicy(tail_mass_delta=1e-9))
        assert t.is_compact
        assert d.cdf(t.support.lo) <= 0.25e-9 * (1 + 1e-6)
        assert d.survival(t.support.hi) <= 0.5e-9 * (1 + 1e-6)
        assert t.support.lo < 0.0 < 30.0 < t.support.hi

    def test_half_line_truncation_keeps_lower_end(self):
        """Test that distributions on [0, ∞) keep their lower support point."""
        d = ParametricLoss("gamma", {"a": 260.345, "b": 0.0373929})
        t = truncate(d)
        assert t.support.lo == 0.0
        assert d.survival(t.support.hi) <= 0.5e-9 * (1 + 1e-6)

    def test_already_compact(self):
        """Test that compact inputs within the cap are refused."""
        with pytest.raises(AlreadyCompactError):
            truncate(ParametricLoss("uniform", {"lo": 1.0, "hi": 2.0}))

    def test_width_cap(self):
        """Test that very heavy tails are cut at lo + cap."""
        d = ParametricLoss("cauchy", {"loc": 10.0, "scale": 1.0})
        t = truncate(d, TruncationPolicy(tail_mass_delta=1e-9, max_support_cap=1000.0))
        assert t.support.width == pytest.approx(1000.0)

    def test_lattice_truncates_to_pmf(self):
        """Test that lattice families become pmfs on their own parity."""
        d = ParametricLoss("poisson_like", {"lam": 3.0, "parity": "even"})
        t = truncate(d)
        assert isinstance(t, DiscretePMF)
        assert np.all(t.points % 2 == 0)
        assert t.masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_truncate_at_renormalizes(self):
        """Test that truncate_at restricts the support and keeps unit mass."""
        d = ParametricLoss("gamma", {"a": 2.0, "b": 1.0})
        t = truncate_at(d, 5.0)
        assert t.support.lo == 0.0 and t.support.hi == 5.0
        assert t.cdf(5.0) == 1.0
        assert t.cdf(2.0) == pytest.approx(d.cdf(2.0) / d.cdf(5.0), rel=1e-9)


class TestValidateAssumption:
    """Test cases for validate_assumption."""

    def test_compact_model_passes(self):
        """Test that a compact model has no problems."""
        assert validate_assumption(ParametricLoss("uniform", {"lo": 1.0, "hi": 2.0})) == []

    def test_unbounded_and_strict(self):
        """Test that unbounded supports and losses below 1 in strict mode are reported."""
        assert validate_assumption(gumbel(1.0, 1.0))
        problems = validate_assumption(ParametricLoss("uniform", {"lo": 0.0, "hi": 2.0}), strict=True)
        assert any("< 1" in p for p in problems)

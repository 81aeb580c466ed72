"""
Unit tests for ordering module.
"""

from itertools import permutations

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.distributions import ParametricLoss, PointMass, truncate, truncate_at
from src.exceptions import BothCompactError, IncomparablePairError, ShapeMismatchError
from src.moments import MomentSequence, comparison_offset, moment_sequence
from src.ordering import (
    DecidedBy, OrderingConfig, Relation, compare, compare_expected, compare_extended,
    compare_moments, min_max, moment_relation, tail_threshold
)
from tests.conftest import gumbel


def uniform(lo: float, hi: float) -> ParametricLoss:
    return ParametricLoss("uniform", {"lo": lo, "hi": hi})


def preferred_first(d1, d2):
    outcome = compare(d1, d2)
    assert outcome.strict
    return (d1, d2) if outcome.relation is Relation.FIRST_PREFERRED else (d2, d1)


def assert_tail_dominance(preferred, other):
    x0 = tail_threshold(preferred, other)
    hi = max(preferred.essential_sup(), other.essential_sup())
    assert x0 is not None and x0 < hi
    xs = np.linspace(x0, hi, 200)
    assert np.all(preferred.survival(xs) <= other.survival(xs) + 1e-9)


truncated_gumbel = st.builds(lambda a, b: truncate(gumbel(float(a), b)),
                             st.integers(20, 30), st.sampled_from([1.0, 1.5, 2.0]))
truncated_gamma = st.builds(lambda shape, scale: truncate(ParametricLoss("gamma", {"a": shape, "b": scale})),
                            st.sampled_from([2.0, 3.0, 5.0, 10.0]), st.sampled_from([0.5, 1.0, 2.0]))
small_uniform = st.builds(lambda lo, width: uniform(float(lo), float(lo + width)),
                          st.integers(1, 6), st.integers(1, 4))


@st.composite
def likelihood_ratio_pair(draw):
    """Two models on one shared compact support whose density ratio is monotone."""
    if draw(st.booleans()):
        a, b = draw(st.integers(20, 30)), draw(st.sampled_from([1.0, 1.5, 2.0]))
        shift = draw(st.sampled_from([1.0, 2.0, 5.0]))
        d1, d2 = gumbel(float(a), b), gumbel(a + shift, b)
    else:
        shapes = draw(st.lists(st.sampled_from([2.0, 3.0, 5.0, 10.0]), min_size=2, max_size=2, unique=True))
        scale = draw(st.sampled_from([0.5, 1.0, 2.0]))
        d1, d2 = (ParametricLoss("gamma", {"a": s, "b": scale}) for s in shapes)
    t1, t2 = truncate(d1), truncate(d2)
    lo, hi = min(t1.support.lo, t2.support.lo), max(t1.support.hi, t2.support.hi)
    return truncate_at(d1, hi, lo), truncate_at(d2, hi, lo)



class TestReferencePairs:
    """Test cases for the three reference comparisons."""

    def test_mean_pair(self, mean_pair):
        """Test that the lower mean is preferred at equal variance."""
        assert compare(*mean_pair).relation is Relation.FIRST_PREFERRED

    def test_variance_pair(self, variance_pair):
        """Test that the smaller variance is preferred at equal mean."""
        assert compare(*variance_pair).relation is Relation.SECOND_PREFERRED

    def test_shape_pair(self, shape_pair):
        """Test that the lighter Weibull tail is preferred at matching first two moments."""
        assert compare(*shape_pair).relation is Relation.SECOND_PREFERRED

    @pytest.mark.parametrize("pair, expected", [
        ("mean_pair", Relation.FIRST_PREFERRED),
        ("variance_pair", Relation.SECOND_PREFERRED),
        ("shape_pair", Relation.SECOND_PREFERRED),
    ])
    def test_truncated_pairs_agree(self, request, pair, expected):
        """Test that the truncated models give the same relations as the originals."""
        d1, d2 = (truncate(d) for d in request.getfixturevalue(pair))
        outcome = compare(d1, d2)
        assert outcome.relation is expected
        assert outcome.strict

    def test_truncated_variance_pair_decided_by_endpoint(self, variance_pair):
        """Test that the truncated variance pair is decided at the right end of the support."""
        d1, d2 = (truncate(d) for d in variance_pair)
        outcome = compare(d1, d2)
        assert outcome.decided_by is DecidedBy.SUPPORT_ENDPOINT
        assert d1.support.hi == pytest.approx(13.1, abs=0.1)
        assert d2.support.hi == pytest.approx(12.6, abs=0.1)

    @pytest.mark.parametrize("pair", ["mean_pair", "variance_pair", "shape_pair"])
    def test_tail_threshold_exists(self, request, pair):
        """Test that the preferred model has the lighter tail beyond some point."""
        preferred, other = preferred_first(*(truncate(d) for d in request.getfixturevalue(pair)))
        assert_tail_dominance(preferred, other)


class TestCascade:
    """Test cases for the individual decision rules."""

    def test_identical_inputs_are_equivalent(self):
        """Test that equal models compare as equivalent."""
        assert compare(uniform(1.0, 3.0), uniform(1.0, 3.0)).relation is Relation.EQUIVALENT
        d = uniform(2.0, 5.0)
        assert compare(d, d).relation is Relation.EQUIVALENT

    def test_point_masses(self):
        """Test that two point masses compare by location."""
        outcome = compare(PointMass(2.0), PointMass(3.0))
        assert outcome.relation is Relation.FIRST_PREFERRED
        assert outcome.decided_by is DecidedBy.POINT_MASS_RULE
        assert compare(PointMass(2.0), PointMass(2.0)).relation is Relation.EQUIVALENT

    def test_point_mass_against_density(self):
        """Test that a point mass below the essential supremum is preferred."""
        outcome = compare(PointMass(2.0), uniform(1.0, 3.0))
        assert outcome.relation is Relation.FIRST_PREFERRED
        assert outcome.decided_by is DecidedBy.POINT_MASS_RULE
        assert compare(uniform(1.0, 3.0), PointMass(4.0)).relation is Relation.FIRST_PREFERRED

    def test_point_mass_at_essential_supremum(self):
        """Test that a point mass at the top of the support loses on moments."""
        outcome = compare(PointMass(3.0), uniform(1.0, 3.0))
        assert outcome.relation is Relation.SECOND_PREFERRED

    def test_support_endpoint(self):
        """Test that the smaller right endpoint wins."""
        outcome = compare(uniform(1.0, 3.0), uniform(2.0, 2.5))
        assert outcome.relation is Relation.SECOND_PREFERRED
        assert outcome.decided_by is DecidedBy.SUPPORT_ENDPOINT
        assert outcome.witness_k is None

    def test_tail_density(self):
        """Test that at a shared endpoint less density near the top wins."""
        outcome = compare(uniform(1.0, 3.0), uniform(2.0, 3.0))
        assert outcome.relation is Relation.FIRST_PREFERRED
        assert outcome.decided_by is DecidedBy.TAIL_DENSITY

    def test_mirrored_outcome(self):
        """Test that swapping the arguments mirrors the relation."""
        outcome = compare(uniform(1.0, 3.0), uniform(2.0, 2.5))
        assert outcome.mirrored().relation is Relation.FIRST_PREFERRED
        assert outcome.to_dict()["decided_by"] == "support_endpoint"

    @settings(max_examples=30, deadline=None)
    @given(lo1=st.integers(1, 6), w1=st.integers(1, 4), lo2=st.integers(1, 6), w2=st.integers(1, 4))
    def test_antisymmetry(self, lo1, w1, lo2, w2):
        """Test that compare(b, a) is the mirror image of compare(a, b)."""
        a, b = uniform(lo1, lo1 + w1), uniform(lo2, lo2 + w2)
        assert compare(b, a).relation is compare(a, b).relation.mirrored()


class TestMomentDecisions:
    """Test cases for decisions made on moment sequences."""

    def test_witness_index(self):
        """Test that the witness is where the final run of the same sign starts."""
        s1 = MomentSequence.from_raw([5.0] + [1.0] * 9)
        s2 = MomentSequence.from_raw([1.0] + [2.0] * 9)
        outcome = compare_moments(s1, s2)
        assert outcome.relation is Relation.FIRST_PREFERRED
        assert outcome.witness_k == 2

    def test_equal_sequences(self):
        """Test that matching sequences are equivalent."""
        s = MomentSequence.from_raw([2.0, 4.0, 8.0])
        assert compare_moments(s, MomentSequence.from_raw([2.0, 4.0, 8.0])).relation is Relation.EQUIVALENT

    def test_alternating_sequences_are_undecided(self):
        """Test that persistent sign changes leave the pair undecided."""
        s1 = MomentSequence.from_raw([2.0, 1.0] * 10)
        s2 = MomentSequence.from_raw([1.5] * 20)
        relation, witness = moment_relation(s1.log_moments, s1.signs, s2.log_moments, s2.signs,
                                            OrderingConfig())
        assert relation is Relation.UNDECIDED
        assert witness is None

    def test_offsets_must_match(self):
        """Test that sequences with different shifts are not compared."""
        with pytest.raises(ShapeMismatchError):
            compare_moments(MomentSequence.from_raw([2.0]), MomentSequence.from_raw([2.0], offset=1.0))

    def test_expected_criterion(self):
        """Test that the expectation rule looks at the first moment only."""
        outcome = compare_expected(MomentSequence.from_raw([2.0, 50.0]), MomentSequence.from_raw([3.0, 9.0]))
        assert outcome.relation is Relation.FIRST_PREFERRED
        assert outcome.decided_by is DecidedBy.FIRST_MOMENT

    def test_min_max(self):
        """Test the indices of the preferred-most and preferred-least items."""
        items = [MomentSequence.from_raw([2.0, 4.0, 8.0]),
                 MomentSequence.from_raw([1.0, 1.0, 1.0]),
                 MomentSequence.from_raw([3.0, 9.0, 27.0])]
        assert min_max(items) == (1, 2)

    def test_min_max_ties_go_to_lowest_index(self):
        """Test that equivalent items keep the first index."""
        items = [MomentSequence.from_raw([2.0, 4.0])] * 3
        assert min_max(items) == (0, 0)

    def test_min_max_incomparable(self):
        """Test that an undecided pair is reported with its indices."""
        items = [MomentSequence.from_raw([1.5] * 20), MomentSequence.from_raw([2.0, 1.0] * 10)]
        with pytest.raises(IncomparablePairError) as info:
            min_max(items)
        assert (info.value.i, info.value.j) == (0, 1)

    def test_min_max_on_distributions(self):
        """Test min_max with the distribution comparator."""
        items = [uniform(1.0, 3.0), PointMass(1.5), uniform(2.0, 4.0)]
        assert min_max(items, comparator=compare) == (1, 2)


class TestExtendedComparison:
    """Test cases for unbounded supports."""

    def test_both_compact_rejected(self):
        """Test that compact pairs are sent back to compare."""
        with pytest.raises(BothCompactError):
            compare_extended(uniform(1.0, 2.0), uniform(1.0, 3.0))

    def test_ratio_criterion(self, shape_pair):
        """Test that a vanishing density ratio decides the pair."""
        outcome = compare_extended(*shape_pair)
        assert outcome.relation is Relation.SECOND_PREFERRED
        assert outcome.decided_by is DecidedBy.RATIO_CRITERION

    def test_parity_lattices_are_undecided(self):
        """Test that even and odd lattice models swap order along the truncations."""
        even = ParametricLoss("poisson_like", {"lam": 3.0, "parity": "even"})
        odd = ParametricLoss("poisson_like", {"lam": 3.0, "parity": "odd"})
        outcome = compare_extended(even, odd)
        assert outcome.relation is Relation.UNDECIDED
        assert outcome.decided_by is DecidedBy.TRUNCATION_SEQUENCE
        assert {step["relation"] for step in outcome.details["steps"]} == {"first_preferred", "second_preferred"}

    def test_invalid_configuration(self):
        """Test that out-of-range tolerances are rejected."""
        with pytest.raises(ValueError):
            OrderingConfig(ratio_c=1.5)
        with pytest.raises(ValueError):
            OrderingConfig(k_max=0)


class TestOrderProperties:
    """Properties of the preference order over randomly drawn truncated models."""

    @pytest.mark.slow
    @settings(max_examples=25, deadline=None)
    @given(d1=st.one_of(truncated_gumbel, truncated_gamma), d2=st.one_of(truncated_gumbel, truncated_gamma))
    def test_tail_threshold_of_strict_pairs(self, d1, d2):
        """Test that every strictly ordered pair has a survival threshold in the preferred direction."""
        assume(compare(d1, d2).strict)
        assert_tail_dominance(*preferred_first(d1, d2))

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(models=st.lists(st.one_of(truncated_gumbel, small_uniform), min_size=3, max_size=3))
    def test_transitivity(self, models):
        """Test that a ≺ b and b ≺ c imply a ≺ c."""
        chains = [(a, b, c) for a, b, c in permutations(models)
                  if compare(a, b).relation is Relation.FIRST_PREFERRED
                  and compare(b, c).relation is Relation.FIRST_PREFERRED]
        assume(chains)
        for a, _, c in chains:
            assert compare(a, c).relation is Relation.FIRST_PREFERRED

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(pair=likelihood_ratio_pair())
    def test_cascade_agrees_with_moments(self, pair):
        """Test that a strict cascade verdict matches the verdict of the moment sequences alone."""
        d1, d2 = pair
        outcome = compare(d1, d2)
        assume(outcome.strict)
        offset = comparison_offset(d1, d2)
        by_moments = compare_moments(moment_sequence(d1, 64, offset), moment_sequence(d2, 64, offset))
        assert by_moments.relation is outcome.relation

"""
Unit tests for moments module.
"""

import math

import numpy as np
import pytest

from src.distributions import DiscretePMF, ParametricLoss, PointMass, truncate
from src.exceptions import NotASimplexError, ShapeMismatchError, UnboundedSupportError
from src.moments import (
    MomentSequence, MomentTable, comparison_offset, mix_moments, moment_sequence
)
from tests.conftest import gumbel


def uniform(lo: float, hi: float) -> ParametricLoss:
    return ParametricLoss("uniform", {"lo": lo, "hi": hi})


class TestMomentSequence:
    """Test cases for the log-domain moment container."""

    def test_from_raw_and_back(self):
        """Test that plain raw moments survive the log-domain representation."""
        s = MomentSequence.from_raw([2.0, -4.0, 0.0])
        assert s.raw(1) == pytest.approx(2.0)
        assert s.raw(2) == pytest.approx(-4.0)
        assert s.raw(3) == 0.0
        assert s.signs.tolist() == [1.0, -1.0, 0.0]

    def test_order_out_of_range(self):
        """Test that moment orders are 1-based and bounded by the horizon."""
        s = MomentSequence.from_raw([1.0, 1.0])
        with pytest.raises(IndexError):
            s.raw(0)
        with pytest.raises(IndexError):
            s.raw(3)

    def test_sign_count_mismatch(self):
        """Test that signs and log moments must have the same length."""
        with pytest.raises(ShapeMismatchError):
            MomentSequence([0.0, 0.0], [1.0])

    def test_truncated_keeps_offset(self):
        """Test that shortening a sequence keeps its shift."""
        s = MomentSequence.from_raw([3.0, 10.0, 36.0], offset=1.0).truncated(2)
        assert s.k_max == 2
        assert s.offset == 1.0


class TestMomentComputation:
    """Test cases for moment_sequence on every distribution kind."""

    def test_point_mass_exact(self):
        """Test that a point mass at a has moments a^k."""
        assert moment_sequence(PointMass(2.0), 5).first(5) == pytest.approx([2, 4, 8, 16, 32])

    def test_pmf_exact(self):
        """Test that atoms are summed exactly."""
        s = moment_sequence(DiscretePMF([1.0, 3.0], [0.5, 0.5]), 3)
        assert s.first(3) == pytest.approx([2.0, 5.0, 14.0], rel=1e-12)

    def test_uniform_closed_form(self):
        """Test a uniform on [1, 3] against (3^(k+1) - 1) / (2(k+1)), including high orders."""
        s = moment_sequence(uniform(1.0, 3.0), 64)
        for k in (1, 2, 10, 64):
            expected = math.log((3 ** (k + 1) - 1) / (2 * (k + 1)))
            assert s.log_moments[k - 1] == pytest.approx(expected, rel=1e-8)
        assert s.variance == pytest.approx(1.0 / 3.0, rel=1e-8)

    def test_high_orders_stay_finite_in_log_domain(self):
        """Test that wide supports overflow only when exponentiated."""
        s = moment_sequence(PointMass(1e6), 64)
        assert np.all(np.isfinite(s.log_moments))
        assert s.raw(64) == math.inf

    def test_offset_is_removed_from_loss_moments(self):
        """Test that shifted sequences report the same loss moments."""
        d = uniform(1.0, 3.0)
        plain = moment_sequence(d, 6)
        shifted = moment_sequence(d, 6, offset=2.0)
        assert shifted.raw(1) == pytest.approx(4.0, rel=1e-10)
        assert shifted.first(4) == pytest.approx(plain.first(4), rel=1e-8)
        assert shifted.variance == pytest.approx(plain.variance, rel=1e-8)

    def test_unbounded_support_rejected(self):
        """Test that untruncated models are refused."""
        with pytest.raises(UnboundedSupportError):
            moment_sequence(gumbel(31.0063, 1.74346), 8)
        with pytest.raises(UnboundedSupportError):
            moment_sequence(ParametricLoss("poisson_like", {"lam": 3.0, "parity": "even"}), 8)

    @pytest.mark.parametrize("model, expected", [
        (gumbel(31.0063, 1.74346), [30, 905, 27437.3, 835606, 2.55545e7]),
        (gumbel(32.0063, 1.74346), [31, 966, 30243.3, 950906, 3.00162e7]),
        (gumbel(6.27294, 2.20532), [5, 33, 219.215, 1654.9, 11957.8]),
        (gumbel(6.19073, 2.06288), [5, 32, 208.895, 1517.51, 10806.8]),
        (ParametricLoss("gamma", {"a": 260.345, "b": 0.0373929}), [9.73504, 95.1351, 933.259, 9190.01, 90839.7]),
        (ParametricLoss("weibull", {"a": 20, "b": 10}), [9.73504, 95.1351, 933.041, 9181.69, 90640.2]),
    ])
    def test_reference_moments_after_truncation(self, model, expected):
        """Test the first five moments of truncated reference models to four significant digits."""
        first = moment_sequence(truncate(model), 8).first(5)
        assert first == pytest.approx(expected, rel=1e-4)

    def test_matching_two_moments_differ_at_three(self, shape_pair):
        """Test that the gamma and Weibull pair separates at the third moment."""
        gamma, weibull = (moment_sequence(truncate(d), 3) for d in shape_pair)
        assert gamma.raw(2) == pytest.approx(weibull.raw(2), rel=1e-5)
        assert gamma.raw(3) > weibull.raw(3)


class TestMixing:
    """Test cases for mixtures of cell moments."""

    def test_mix_moments_is_linear(self):
        """Test that mixture moments are the weighted raw moments."""
        cells = [[moment_sequence(PointMass(2.0), 3), moment_sequence(PointMass(4.0), 3)]]
        mixed = mix_moments(cells, [[0.25, 0.75]])
        assert mixed.first(3) == pytest.approx([3.5, 13.0, 50.0])

    def test_mix_moments_rejects_bad_weights(self):
        """Test shape and simplex checks on the weights."""
        cells = [[moment_sequence(PointMass(2.0), 3), moment_sequence(PointMass(4.0), 3)]]
        with pytest.raises(ShapeMismatchError):
            mix_moments(cells, [[0.5], [0.5]])
        with pytest.raises(NotASimplexError):
            mix_moments(cells, [[0.5, 0.4]])

    def test_mix_moments_rejects_mixed_horizons(self):
        """Test that cells must share one horizon."""
        cells = [[moment_sequence(PointMass(2.0), 3), moment_sequence(PointMass(4.0), 4)]]
        with pytest.raises(ShapeMismatchError):
            mix_moments(cells, [[0.5, 0.5]])

    def test_table_uses_common_offset(self):
        """Test that a cell below 1 shifts the whole table and expected losses stay unshifted."""
        table = MomentTable.from_cells([[uniform(0.5, 1.5), uniform(1.0, 3.0)]], 8)
        assert table.offset == pytest.approx(0.5)
        assert table.offset == comparison_offset(uniform(0.5, 1.5), uniform(1.0, 3.0))
        assert table.first_moments() == pytest.approx(np.array([[1.0, 2.0]]), rel=1e-8)
        assert table.mix([[0.5, 0.5]]).mean == pytest.approx(1.5, rel=1e-8)

    def test_table_mix_matches_mix_moments(self):
        """Test that the stacked table mixes like the per-cell function."""
        cells = [[PointMass(3.0), PointMass(1.0)], [PointMass(2.0), PointMass(4.0)]]
        table = MomentTable.from_cells(cells, 6)
        weights = np.array([[0.1, 0.2], [0.3, 0.4]])
        direct = mix_moments([[table.cell(i, j) for j in range(2)] for i in range(2)], weights)
        np.testing.assert_allclose(table.mix(weights).log_moments, direct.log_moments, rtol=1e-12)

    def test_table_row_and_column_payoffs(self):
        """Test the per-row and per-column mixtures used by best responses."""
        cells = [[PointMass(3.0), PointMass(1.0)], [PointMass(2.0), PointMass(4.0)]]
        table = MomentTable.from_cells(cells, 2)
        logs, signs = table.row_payoffs(np.array([0.5, 0.5]))
        assert np.exp(logs[:, 0]) == pytest.approx([2.0, 3.0])
        logs, signs = table.col_payoffs(np.array([1.0, 0.0]))
        assert np.exp(logs[:, 0]) == pytest.approx([3.0, 1.0])

"""
Tests for the probability of deceptive social information (ODPU)
"""

from unittest.mock import patch

import numpy as np
import pytest
from scipy import stats

from meta_social_learning.uncertainty.odpu import (
    GroupSpec,
    binary_success_copy_probability,
    binomial_standard_error,
    odpu_from_estimates,
    odpu_grid,
    odpu_monte_carlo,
    odpu_or_none,
    odpu_quadrature,
)
from meta_social_learning.utils.errors import ConfigurationError, NumericError


class TestOdpuQuadrature:
    """Tests for the quadrature evaluation"""

    def test_symmetric_groups_give_one_half(self):
        """Identical groups are equally likely to produce the maximum"""
        spec = GroupSpec.from_arrays((1.0, 1.0), (0.1, 0.1), (50, 50))
        assert odpu_quadrature(spec) == pytest.approx(0.5, abs=1e-6)

    def test_single_draw_closed_form(self):
        """With one individual per arm ODPU is P(X2 > X1) of two normals"""
        spec = GroupSpec.from_arrays((1.0, 0.4), (0.3, 0.4), (1, 1))
        expected = stats.norm.cdf(-0.6 / np.hypot(0.3, 0.4))
        assert odpu_quadrature(spec) == pytest.approx(expected, abs=1e-6)

    def test_separated_groups_give_zero(self):
        """Non-overlapping distributions are never deceptive"""
        spec = GroupSpec.from_arrays((1.0, 0.0), (0.01, 0.01), (50, 50))
        assert odpu_quadrature(spec) == 0.0

    def test_grows_with_suboptimal_spread(self):
        """A wider sub-optimal arm is more deceptive"""
        values = [odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4), (0.05, s), (50, 50)))
                  for s in (0.1, 0.2, 0.35, 0.5)]
        assert values == sorted(values)
        assert values[-1] > values[0]

    def test_grows_with_suboptimal_group_size(self):
        """More individuals on the sub-optimal arm raise the chance of a deceptive maximum"""
        small = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4), (0.05, 0.3), (50, 10)))
        large = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4), (0.05, 0.3), (50, 90)))
        assert large > small

    def test_zero_sigma_is_floored(self):
        """Degenerate arms do not break the integration"""
        value = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4), (0.0, 0.5), (50, 50)))
        assert 0.0 <= value <= 1.0

    def test_optimal_group_first(self):
        """Group 0 must carry the highest mean"""
        with pytest.raises(ConfigurationError):
            odpu_quadrature(GroupSpec.from_arrays((0.4, 1.0), (0.1, 0.1), (5, 5)))

    def test_group_spec_validation(self):
        """Single groups and empty groups are rejected"""
        with pytest.raises(ConfigurationError):
            GroupSpec.from_arrays((1.0,), (0.1,), (5,))
        with pytest.raises(ConfigurationError):
            GroupSpec.from_arrays((1.0, 0.4), (0.1, 0.1), (5, 0))

    def test_three_groups(self):
        """Extra sub-optimal groups can only increase ODPU"""
        two = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4), (0.05, 0.3), (50, 50)))
        three = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.4, 0.5), (0.05, 0.3, 0.3), (50, 50, 50)))
        assert three >= two - 1e-6

    @pytest.mark.parametrize("shift", [-3.0, 0.5, 10.0])
    def test_translation_invariance(self, shift):
        """Adding the same constant to every mean leaves ODPU unchanged"""
        base = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.6), (0.1, 0.4), (40, 60)))
        moved = odpu_quadrature(GroupSpec.from_arrays((1.0 + shift, 0.6 + shift), (0.1, 0.4), (40, 60)))
        assert moved == pytest.approx(base, abs=1e-7)

    def test_close_means_are_highly_uncertain(self):
        """A narrow optimal arm next to a wide, close sub-optimal arm is above th_u"""
        value = odpu_quadrature(GroupSpec.from_arrays((1.0, 0.9), (0.05, 0.5), (50, 50)))
        assert 0.1 < value < 1.0

    @pytest.mark.parametrize("counts", [(192, 8), (199, 1), (1000, 3), (3, 197)])
    def test_unbalanced_counts(self, counts):
        """Large optimal groups next to wide sub-optimal arms stay in [0, 1]"""
        value = odpu_quadrature(GroupSpec.from_arrays((0.69857, 0.59557), (0.05064, 0.19714), counts))
        assert 0.0 <= value <= 1.0

    def test_unbalanced_counts_match_sampling(self):
        """The underflowing lower end of the range does not bias the integral"""
        spec = GroupSpec.from_arrays((0.69857, 0.59557), (0.05064, 0.19714), (192, 8))
        exact = odpu_quadrature(spec)
        trials = 200000
        estimate = odpu_monte_carlo(spec, trials, np.random.default_rng(21), batch=50000)
        assert abs(estimate - exact) <= 4 * binomial_standard_error(exact, trials) + 1e-5

    def test_quadrature_failures_are_numeric_errors(self):
        """Errors raised inside the integrator surface as NumericError"""
        spec = GroupSpec.from_arrays((1.0, 0.6), (0.1, 0.4), (50, 50))
        with patch("meta_social_learning.uncertainty.odpu.integrate.quad",
                   side_effect=ValueError("math domain error")):
            with pytest.raises(NumericError):
                odpu_quadrature(spec)


class TestOdpuMonteCarlo:
    """Tests for the sampling estimate"""

    def test_agrees_with_quadrature(self):
        """Monte Carlo lies within four binomial standard errors of the quadrature"""
        spec = GroupSpec.from_arrays((1.0, 0.4), (0.05, 0.35), (50, 50))
        exact = odpu_quadrature(spec)
        trials = 200000
        estimate = odpu_monte_carlo(spec, trials, np.random.default_rng(7), batch=50000)
        assert abs(estimate - exact) <= 4 * binomial_standard_error(exact, trials) + 1e-9

    @pytest.mark.slow
    def test_agrees_with_quadrature_on_sigma_grid(self):
        """Across a 5x5 sigma grid sampling stays within 3 SE of the quadrature"""
        trials = 1_000_000
        rng = np.random.default_rng(2024)
        deviations = []
        for s_opt in (0.05, 0.1, 0.2, 0.3, 0.4):
            for s_sub in (0.1, 0.2, 0.3, 0.4, 0.5):
                spec = GroupSpec.from_arrays((1.0, 0.9), (s_opt, s_sub), (50, 50))
                exact = odpu_quadrature(spec)
                estimate = odpu_monte_carlo(spec, trials, rng, batch=250000)
                deviations.append(abs(estimate - exact) / binomial_standard_error(exact, trials))
        deviations = np.array(deviations)
        assert np.count_nonzero(deviations > 3.0) <= 1
        assert deviations.max() < 4.0

    def test_symmetric_estimate(self):
        """Sampling the symmetric case gives about one half"""
        spec = GroupSpec.from_arrays((1.0, 1.0), (0.2, 0.2), (10, 10))
        assert odpu_monte_carlo(spec, 40000, np.random.default_rng(3)) == pytest.approx(0.5, abs=0.01)

    def test_needs_trials(self, rng):
        """At least one trial is required"""
        with pytest.raises(ConfigurationError):
            odpu_monte_carlo(GroupSpec.from_arrays((1.0, 0.4), (0.1, 0.1), (5, 5)), 0, rng)

    def test_standard_error(self):
        """SE of a proportion is sqrt(p (1 - p) / n)"""
        assert binomial_standard_error(0.5, 100) == pytest.approx(0.05)


class TestOdpuFromEstimates:
    """Tests for ODPU computed from population estimates"""

    def test_arm_order_does_not_matter(self):
        """Arms are sorted by estimated mean before evaluation"""
        forward = odpu_from_estimates([1.0, 0.4], [0.05, 0.3], [50, 50])
        backward = odpu_from_estimates([0.4, 1.0], [0.3, 0.05], [50, 50])
        assert forward == pytest.approx(backward, abs=1e-9)

    def test_unobserved_arm_gives_zero(self):
        """With one observed arm nothing can be deceptive"""
        assert odpu_from_estimates([1.0, float("nan")], [0.1, float("nan")], [100, 0]) == 0.0

    def test_length_mismatch(self):
        """Estimate vectors must have equal length"""
        with pytest.raises(ConfigurationError):
            odpu_from_estimates([1.0, 0.4], [0.1], [5, 5])

    def test_estimates_from_a_crowded_arm(self):
        """Estimates with almost every individual on one arm evaluate without error"""
        value = odpu_from_estimates([0.69857, 0.59557], [0.05064, 0.19714], [192, 8])
        assert 0.0 <= value <= 1.0

    def test_or_none_maps_numeric_failures(self):
        """odpu_or_none returns None when the quadrature fails"""
        with patch("meta_social_learning.uncertainty.odpu.odpu_quadrature",
                   side_effect=NumericError("non-finite")):
            assert odpu_or_none([1.0, 0.4], [0.05, 0.3], [50, 50]) is None

    def test_or_none_passes_values(self):
        """odpu_or_none returns the value when evaluation succeeds"""
        assert odpu_or_none([1.0, 0.4], [0.05, 0.05], [50, 50]) == pytest.approx(0.0, abs=1e-6)


class TestOdpuHelpers:
    """Tests for the grid and binary-reward helpers"""

    def test_grid_shape_and_range(self):
        """The heat map has one cell per sigma pair, all probabilities"""
        grid = odpu_grid((1.0, 0.4), [0.05, 0.1], [0.1, 0.3, 0.5], 50, 50)
        assert grid.shape == (2, 3)
        assert np.all((grid >= 0) & (grid <= 1))
        assert np.all(np.diff(grid, axis=1) >= -1e-6)

    def test_binary_success_copy_probability(self):
        """Copy probability is mu1 N / (mu1 N + mu2 M)"""
        assert binary_success_copy_probability(0.9, 0.5, 50, 50) == pytest.approx(45 / 70)

    def test_binary_copy_without_payoff(self):
        """No reward anywhere gives probability 0"""
        assert binary_success_copy_probability(0.0, 0.0, 5, 5) == 0.0

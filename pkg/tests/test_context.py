"""
Tests for the EC / C / U context detectors and the context encoder
"""

from unittest.mock import patch

import numpy as np
import pytest

from meta_social_learning.context.context_encoding import (
    Context,
    ContextEncoder,
    ContextParams,
    detect_conformity,
    detect_ec,
    detect_uncertainty,
    estimate_arm_stats,
    state_flags,
    state_index,
)
from meta_social_learning.learning.learners import SocialHistory, SocialInfo
from meta_social_learning.utils.errors import ConfigurationError, NumericError

NAN = float("nan")


def info(t, actions, rewards, k=2):
    return SocialInfo.from_actions(t, np.array(actions), np.array(rewards, dtype=float), k)


class TestStateIndex:
    """Tests for the 4*EC + 2*C + U encoding"""

    def test_round_trip_all_states(self):
        """Every state index decodes to the flags that produced it"""
        for index in range(8):
            assert state_index(*state_flags(index)) == index

    def test_known_states(self):
        """EC alone is state 4, C alone is 2, U alone is 1"""
        assert state_index(1, 0, 0) == 4
        assert state_index(0, 1, 0) == 2
        assert state_index(0, 0, 1) == 1

    def test_invalid_index(self):
        """Indices outside 0..7 are rejected"""
        with pytest.raises(ConfigurationError):
            state_flags(8)

    def test_context_state_property(self):
        """Context.state follows the same encoding"""
        ctx = Context(1, 0, 1, 0.3, np.zeros(2), np.zeros(2))
        assert ctx.state == 5
        assert ctx.flags == (1, 0, 1)


class TestArmStats:
    """Tests for per-arm estimates"""

    def test_means_and_sample_std(self):
        """Means per arm and sample standard deviation with n - 1"""
        mu, sigma, counts = estimate_arm_stats(info(1, [0, 0, 1], [1.0, 3.0, 5.0]))
        np.testing.assert_allclose(mu, [2.0, 5.0])
        assert sigma[0] == pytest.approx(np.sqrt(2.0))
        assert np.isnan(sigma[1])
        np.testing.assert_array_equal(counts, [2, 1])

    def test_unchosen_arm_is_nan(self):
        """An arm nobody chose has no estimate"""
        mu, _, counts = estimate_arm_stats(info(1, [0, 0], [1.0, 1.0]))
        assert np.isnan(mu[1])
        assert counts[1] == 0


class TestDetectors:
    """Tests for the three binary detectors"""

    def test_ec_fires_above_threshold(self):
        """A move of the best arm's mean above th_ec is a change"""
        params = ContextParams(th_ec=0.15)
        assert detect_ec(np.array([1.0, 0.4]), np.array([0.8, 0.4]), params) == 1
        assert detect_ec(np.array([1.0, 0.4]), np.array([0.9, 0.4]), params) == 0

    def test_ec_without_past(self):
        """No previous estimate means no change"""
        assert detect_ec(np.array([1.0, 0.4]), None, ContextParams()) == 0

    def test_ec_ignores_newly_observed_arm(self):
        """A best arm without a past estimate does not fire"""
        assert detect_ec(np.array([0.2, 1.0]), np.array([0.2, NAN]), ContextParams()) == 0

    def test_conformity(self):
        """C is 1 when the best-looking arm is also the most chosen"""
        assert detect_conformity(np.array([1.0, 0.4]), np.array([7, 3]), ec=0) == 1
        assert detect_conformity(np.array([1.0, 0.4]), np.array([3, 7]), ec=0) == 0

    def test_conformity_reset_by_change(self):
        """C is forced to 0 whenever EC fires"""
        assert detect_conformity(np.array([1.0, 0.4]), np.array([7, 3]), ec=1) == 0

    def test_uncertainty_threshold(self):
        """U compares the ODPU of the estimates with th_u"""
        unc, value = detect_uncertainty(np.array([1.0, 0.4]), np.array([0.05, 0.5]), np.array([50, 50]),
                                        ContextParams(th_u=0.1))
        assert value > 0.1
        assert unc == 1

    def test_uncertainty_single_arm(self):
        """With one observed arm ODPU is 0 and U is 0"""
        assert detect_uncertainty(np.array([1.0, NAN]), np.array([0.1, NAN]), np.array([10, 0]),
                                  ContextParams()) == (0, 0.0)

    def test_uncertainty_after_numeric_failure(self):
        """A failed ODPU evaluation leaves U at 0 instead of aborting the run"""
        with patch("meta_social_learning.uncertainty.odpu.odpu_quadrature", side_effect=NumericError("nan")):
            assert detect_uncertainty(np.array([1.0, 0.9]), np.array([0.05, 0.5]), np.array([50, 50]),
                                      ContextParams()) == (0, 0.0)

    def test_uncertainty_with_crowded_arm(self):
        """Almost the whole population on one arm still gives a probability"""
        unc, value = detect_uncertainty(np.array([0.69857, 0.59557]), np.array([0.05064, 0.19714]),
                                        np.array([192, 8]), ContextParams())
        assert unc in (0, 1)
        assert 0.0 <= value <= 1.0

    def test_params_validation(self):
        """Thresholds and lag are range checked"""
        with pytest.raises(ConfigurationError):
            ContextParams(th_u=1.5)
        with pytest.raises(ConfigurationError):
            ContextParams(delta=0)

    def test_params_from_config(self, default_config):
        """Defaults come from the context section"""
        params = ContextParams.from_config(default_config)
        assert params == ContextParams(0.15, 0.1, 1)


class TestContextEncoder:
    """Tests for the per-run encoder"""

    def test_empty_before_observable(self):
        """Before t - tau > 0 the context is all zeros"""
        encoder = ContextEncoder(2)
        ctx = encoder.encode(SocialHistory(4), 1, 1, ContextParams())
        assert ctx.flags == (0, 0, 0)

    def test_detects_reversal(self):
        """A drop of the leading arm's reward is reported as a change"""
        history = SocialHistory(4)
        history.record(info(1, [0, 0, 0, 1], [1.0, 1.0, 1.0, 0.4]))
        history.record(info(2, [0, 0, 0, 1], [0.4, 0.4, 0.4, 1.0]))
        encoder = ContextEncoder(2)
        params = ContextParams()
        first = encoder.encode(history, 2, 1, params)
        assert first.ec == 0
        assert first.conf == 1
        second = encoder.encode(history, 3, 1, params)
        assert second.ec == 1
        assert second.conf == 0

    def test_unchosen_arm_keeps_previous_estimate(self):
        """An arm nobody chose at t - tau retains its last estimate"""
        history = SocialHistory(4)
        history.record(info(1, [0, 1], [1.0, 0.4]))
        history.record(info(2, [0, 0], [1.0, 1.0]))
        encoder = ContextEncoder(2)
        encoder.encode(history, 2, 1, ContextParams())
        ctx = encoder.encode(history, 3, 1, ContextParams())
        assert ctx.mu_hat[1] == pytest.approx(0.4)

    def test_stats_are_cached_per_step(self):
        """Repeated requests for the same observed step share one result"""
        history = SocialHistory(4)
        history.record(info(1, [0, 1], [1.0, 0.4]))
        encoder = ContextEncoder(2)
        assert encoder.stats(history, 2, 1) is encoder.stats(history, 2, 1)

    def test_ewma_smooths_means(self):
        """EWMA estimates move only part of the way to a new value"""
        history = SocialHistory(4)
        history.record(info(1, [0, 1], [1.0, 0.0]))
        history.record(info(2, [0, 1], [0.0, 0.0]))
        encoder = ContextEncoder(2, ewma=True, ewma_alpha=0.5)
        encoder.encode(history, 2, 1, ContextParams())
        ctx = encoder.encode(history, 3, 1, ContextParams())
        assert ctx.mu_hat[0] == pytest.approx(0.5)

    def test_invalid_ewma_alpha(self):
        """EWMA weight must lie in (0, 1]"""
        with pytest.raises(ConfigurationError):
            ContextEncoder(2, ewma=True, ewma_alpha=0.0)

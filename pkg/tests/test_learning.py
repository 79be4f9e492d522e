"""
Tests for individual learning and the primitive copy rules
"""

import numpy as np
import pytest

from meta_social_learning.learning.learners import (
    QTable,
    SocialHistory,
    SocialInfo,
    conformist_copy,
    conformist_copy_population,
    epsilon_greedy,
    epsilon_greedy_population,
    model_copy,
    model_copy_population,
    q_update,
    q_update_population,
    random_individual_copy,
    random_individual_copy_population,
    success_based_copy,
    success_based_copy_population,
)
from meta_social_learning.utils.errors import ConfigurationError, NotYetObservable


def make_history(*records, capacity=4):
    history = SocialHistory(capacity)
    for t, actions, rewards in records:
        history.record(SocialInfo.from_actions(t, np.array(actions), np.array(rewards), k=2))
    return history


class TestQLearning:
    """Tests for Q-value updates and epsilon-greedy choice"""

    def test_q_update_moves_towards_reward(self):
        """q[a] <- q[a] + beta (r - q[a]) and other entries are untouched"""
        table = q_update(QTable(np.array([0.5, 0.0]), beta=0.2), 0, 1.5)
        np.testing.assert_allclose(table.q, [0.7, 0.0])

    def test_q_update_returns_new_table(self):
        """The original table is not modified"""
        table = QTable.zeros(2)
        q_update(table, 1, 1.0)
        np.testing.assert_array_equal(table.q, [0.0, 0.0])

    def test_population_update_matches_single(self):
        """The vectorised update agrees with the per-agent update"""
        q = np.array([[0.0, 0.0], [0.5, 0.2]])
        q_update_population(q, np.array([1, 0]), np.array([1.0, 0.0]), 0.2)
        np.testing.assert_allclose(q, [[0.0, 0.2], [0.4, 0.2]])

    def test_invalid_beta(self):
        """beta outside (0, 1] is rejected"""
        with pytest.raises(ConfigurationError):
            QTable.zeros(2, beta=0.0)

    def test_greedy_when_epsilon_zero(self, rng):
        """epsilon 0 always exploits, lowest index on ties"""
        assert epsilon_greedy(np.array([0.1, 0.9, 0.9]), 0.0, rng) == 1
        assert epsilon_greedy(QTable.zeros(3), 0.0, rng) == 0

    def test_exploration_rate(self, rng):
        """With epsilon 1 every arm is chosen about equally often"""
        choices = [epsilon_greedy(np.array([1.0, 0.0]), 1.0, rng) for _ in range(4000)]
        assert np.mean(choices) == pytest.approx(0.5, abs=0.05)

    def test_population_exploration_share(self, rng):
        """About epsilon / k of a greedy population picks the non-greedy arm"""
        q = np.tile([1.0, 0.0], (20000, 1))
        actions = epsilon_greedy_population(q, 0.1, rng)
        assert actions.mean() == pytest.approx(0.05, abs=0.01)

    def test_invalid_epsilon(self, rng):
        """epsilon must lie in [0, 1]"""
        with pytest.raises(ConfigurationError):
            epsilon_greedy(np.zeros(2), 1.5, rng)
        with pytest.raises(ConfigurationError):
            epsilon_greedy_population(np.zeros((3, 2)), -0.1, rng)


class TestSocialInfo:
    """Tests for population records"""

    def test_from_actions_counts(self):
        """Action counts are derived from the actions"""
        info = SocialInfo.from_actions(1, np.array([0, 1, 1]), np.array([0.2, 0.4, 0.6]), k=2)
        np.testing.assert_array_equal(info.freq, [1, 2])
        assert info.m == 3
        assert list(info.entries())[2] == (2, 1, 0.6)

    def test_inconsistent_counts_rejected(self):
        """Counts must sum to the population size"""
        with pytest.raises(ConfigurationError):
            SocialInfo(1, np.array([1, 1]), np.array([0, 1, 1]), np.array([0.0, 0.0, 0.0]))

    def test_action_outside_range_rejected(self):
        """Recorded actions must be valid arms"""
        with pytest.raises(ConfigurationError):
            SocialInfo(1, np.array([1, 0]), np.array([2]), np.array([0.0]))


class TestSocialHistory:
    """Tests for the latency-aware history buffer"""

    def test_observe_with_latency(self):
        """An agent at t with latency tau sees step t - tau"""
        history = make_history((1, [0, 0], [1, 1]), (2, [1, 1], [1, 1]))
        assert history.observe(3, 2).t == 1
        assert history.observe(3, 1).t == 2

    def test_nothing_observable_at_start(self):
        """t - tau <= 0 is not observable"""
        history = make_history((1, [0], [1.0]))
        with pytest.raises(NotYetObservable):
            history.observe(1, 1)

    def test_capacity_evicts_oldest(self):
        """Only the newest ``capacity`` records are kept"""
        history = make_history(*[(t, [0], [0.0]) for t in range(1, 6)], capacity=2)
        assert len(history) == 2
        assert history.latest == 5
        with pytest.raises(NotYetObservable):
            history.observe(4, 3)


class TestCopyRules:
    """Tests for success-based, conformist and model copying"""

    def test_success_copies_best_reward(self):
        """Success-based copying returns the action of the top earner"""
        history = make_history((1, [0, 1, 0], [0.1, 0.9, 0.3]))
        assert success_based_copy(history, 2, 1) == 1

    def test_success_tie_breaks_to_lowest_id(self):
        """Equal rewards resolve to the lowest agent id"""
        history = make_history((1, [1, 0], [0.5, 0.5]))
        assert success_based_copy(history, 2, 1) == 1

    def test_conformist_copies_majority(self):
        """Conformist copying returns the most frequent action"""
        history = make_history((1, [1, 1, 0], [0.0, 0.0, 5.0]))
        assert conformist_copy(history, 2, 1) == 1

    def test_conformist_tie_breaks_to_lowest_arm(self):
        """Equal counts resolve to arm 0"""
        history = make_history((1, [1, 0], [0.0, 0.0]))
        assert conformist_copy(history, 2, 1) == 0

    def test_random_individual_copy_is_observed_action(self, rng):
        """The copied action belongs to some agent at t - tau"""
        history = make_history((1, [1, 1, 1], [0.0, 0.0, 0.0]))
        assert random_individual_copy(history, 2, 1, rng) == 1

    def test_perfect_model(self, rng):
        """The perfect model always suggests the optimal arm"""
        assert all(model_copy("perfect", 1, rng) == 1 for _ in range(20))

    def test_correct90_model_accuracy(self, rng):
        """The noisy model is right about 90% of the time"""
        actions = model_copy_population("correct90", 0, 20000, rng)
        assert (actions == 0).mean() == pytest.approx(0.9, abs=0.01)

    def test_correct90_never_suggests_invalid_arm(self, rng):
        """Wrong suggestions are other valid arms"""
        actions = model_copy_population("correct90", 2, 2000, rng, k=3)
        assert set(np.unique(actions)) <= {0, 1, 2}

    def test_unknown_model(self, rng):
        """Unknown model kinds are configuration errors"""
        with pytest.raises(ConfigurationError):
            model_copy("oracle", 0, rng)

    def test_population_rules_agree_with_single_agent_rules(self, rng):
        """Every copier of a population receives the single-agent answer"""
        history = make_history((1, [0, 1, 1, 0], [0.9, 0.1, 0.2, 0.3]))
        np.testing.assert_array_equal(success_based_copy_population(history, 2, 1, 3), [0, 0, 0])
        np.testing.assert_array_equal(conformist_copy_population(history, 2, 1, 2), [0, 0])
        assert success_based_copy(history, 2, 1) == 0
        assert conformist_copy(history, 2, 1) == 0

    def test_random_individual_population_draws_per_copier(self, rng):
        """Each copier takes an action some agent actually played"""
        history = make_history((1, [0, 1, 1, 1], [0.0, 0.0, 0.0, 0.0]))
        actions = random_individual_copy_population(history, 2, 1, 4000, rng)
        assert set(np.unique(actions)) == {0, 1}
        assert actions.mean() == pytest.approx(0.75, abs=0.03)

    def test_population_rules_need_observable_record(self, rng):
        """Population copy rules raise while t - tau is unobservable"""
        history = make_history((1, [0], [1.0]))
        with pytest.raises(NotYetObservable):
            success_based_copy_population(history, 1, 1, 5)
        with pytest.raises(NotYetObservable):
            random_individual_copy_population(history, 3, 5, 5, rng)

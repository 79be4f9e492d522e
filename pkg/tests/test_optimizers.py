"""
Tests for controller training with the GA and differential evolution
"""

from unittest.mock import MagicMock, patch

import numpy as np
import pandas as pd
import pytest

from meta_social_learning.evolution.population import EvoParams, run_lifetime
from meta_social_learning.optimizers.differential_evolution import (
    DeConfig,
    binomial_crossover,
    de_train,
    rand1_donors,
)
from meta_social_learning.optimizers.fitness import (
    FCN_SPACE,
    RULE_SPACE,
    check_space,
    controller_fitness,
    decode_genotype,
    evaluate_population,
    genotype_length,
    genotype_settings,
    space_meta_kind,
)
from meta_social_learning.optimizers.genetic_algorithm import (
    GaConfig,
    TrainingResult,
    best_of_runs,
    ga_train,
    initial_population,
    mutate_genotype,
    next_generation,
    one_point_crossover,
)
from meta_social_learning.strategies.meta_strategies import (
    FCN_PARAMETERS,
    FCNWeights,
    MetaKind,
    RuleTable,
    msl_ec_conf_unc,
    rule_table_from_dispatcher,
)
from meta_social_learning.utils.errors import ConfigurationError

TARGET_RULES = np.array([1, 0, 2, 2, 0, 0, 0, 0])


def rule_matches(genotypes):
    """Number of strategy genes agreeing with the SL-EC-Conf-Unc table"""
    return (np.round(genotypes[:, :8]) == TARGET_RULES).sum(axis=1).astype(float)


def negative_sphere(genotypes):
    return -np.sum((genotypes - 0.5) ** 2, axis=1)


class TestGenotypeSpaces:
    """Tests for genotype decoding"""

    def test_lengths(self):
        """Rule tables have 10 genes, networks 123"""
        assert genotype_length(RULE_SPACE) == 10
        assert genotype_length(FCN_SPACE) == FCN_PARAMETERS

    def test_meta_kinds(self):
        """Rule genotypes drive SL-GA, network genotypes SL-NE"""
        assert space_meta_kind(RULE_SPACE) is MetaKind.SL_GA
        assert space_meta_kind(FCN_SPACE) is MetaKind.SL_NE

    def test_unknown_space(self):
        """Only the two spaces exist"""
        with pytest.raises(ConfigurationError):
            check_space("tree")

    def test_decode(self):
        """Genotypes decode to the matching controller type"""
        table = decode_genotype(RULE_SPACE, np.r_[TARGET_RULES, 0.15, 0.05])
        assert table == rule_table_from_dispatcher(msl_ec_conf_unc, 0.15, 0.05)
        assert isinstance(decode_genotype(FCN_SPACE, np.zeros(FCN_PARAMETERS), "relu"), FCNWeights)

    def test_settings_carry_controller(self, meta_settings):
        """Decoded controllers are placed into a copy of the settings"""
        settings = genotype_settings(RULE_SPACE, np.r_[TARGET_RULES, 0.2, 0.1], meta_settings)
        assert isinstance(settings.rule_table, RuleTable)
        assert meta_settings.rule_table is None


class TestControllerFitness:
    """Tests for simulation-based fitness"""

    def test_median_of_lifetime_runs(self, short_reversal):
        """Fitness is the median cumulative reward over the seed set"""
        params = EvoParams(m=10)
        genotype = np.r_[TARGET_RULES, 0.15, 0.1]
        seeds = [1, 2, 3]
        settings = genotype_settings(RULE_SPACE, genotype)
        expected = np.median([
            run_lifetime(MetaKind.SL_GA, short_reversal, params, np.random.default_rng(s), settings, s,
                         record_context=False).cumulative_psi
            for s in seeds
        ])
        assert controller_fitness(genotype, RULE_SPACE, short_reversal, params, seeds) == pytest.approx(expected)

    def test_needs_seeds(self, short_reversal):
        """At least one replicate is required"""
        with pytest.raises(ConfigurationError):
            controller_fitness(np.zeros(10), RULE_SPACE, short_reversal, EvoParams(m=5), [])

    def test_population_sequential(self, short_reversal):
        """One score per genotype row"""
        genotypes = np.array([np.r_[TARGET_RULES, 0.15, 0.1], np.r_[np.zeros(8), 0.15, 0.1]])
        scores = evaluate_population(genotypes, RULE_SPACE, short_reversal, EvoParams(m=10), [4])
        assert scores.shape == (2,)

    @patch("meta_social_learning.optimizers.fitness.ProcessPoolExecutor")
    def test_population_parallel(self, mock_pool_class, short_reversal):
        """Several workers score the genotypes in a process pool"""
        pool = MagicMock()
        pool.map.return_value = iter([1.0, 2.0])
        mock_pool_class.return_value.__enter__.return_value = pool

        scores = evaluate_population(np.zeros((2, 10)), RULE_SPACE, short_reversal, EvoParams(m=5), [1],
                                     workers=2)

        np.testing.assert_array_equal(scores, [1.0, 2.0])
        mock_pool_class.assert_called_once_with(max_workers=2)


class TestGaOperators:
    """Tests for GA configuration and operators"""

    def test_space_defaults(self, default_config):
        """Rule and network training use their own elites and stall limits"""
        rule = GaConfig.for_space(RULE_SPACE, default_config)
        fcn = GaConfig.for_space(FCN_SPACE, default_config)
        assert (rule.elites, rule.stall) == (4, 20)
        assert (fcn.elites, fcn.stall) == (5, 50)
        assert rule.pop == fcn.pop == 50

    @pytest.mark.parametrize("kwargs", [
        {"pop": 1}, {"elites": 60}, {"crossover_prob": 1.5}, {"gene_mutation_prob": -0.1},
        {"threshold_bounds": (0.5, 0.1)}, {"stall": 0},
    ])
    def test_validation(self, kwargs):
        """Invalid GA settings are configuration errors"""
        with pytest.raises(ConfigurationError):
            GaConfig(**kwargs)

    def test_initial_rule_population(self, rng):
        """Strategy genes are integers 0-2 and thresholds lie in bounds"""
        pop = initial_population(RULE_SPACE, GaConfig(pop=20), rng)
        assert pop.shape == (20, 10)
        assert set(np.unique(pop[:, :8])) <= {0.0, 1.0, 2.0}
        assert np.all((pop[:, 8:] >= 1e-3) & (pop[:, 8:] <= 1.0))

    def test_initial_fcn_population(self, rng):
        """Network weights start uniform in [init_low, init_high]"""
        pop = initial_population(FCN_SPACE, GaConfig(pop=6), rng)
        assert pop.shape == (6, FCN_PARAMETERS)
        assert np.all(np.abs(pop) <= 1.0)

    def test_crossover_exchanges_tails(self, rng):
        """Children swap everything after one cut point"""
        a, b = np.zeros(10), np.ones(10)
        c, d = one_point_crossover(a, b, rng)
        np.testing.assert_array_equal(c + d, np.ones(10))
        cut = int(np.argmax(c))
        assert 1 <= cut < 10
        assert np.all(c[cut:] == 1.0)

    def test_rule_mutation_changes_strategy(self, rng):
        """A mutated strategy gene moves to a different strategy"""
        config = GaConfig(gene_mutation_prob=1.0, gaussian_sigma=5.0)
        genotype = np.r_[TARGET_RULES, 0.15, 0.1]
        child = mutate_genotype(genotype, RULE_SPACE, config, rng)
        assert np.all(child[:8] != TARGET_RULES)
        assert set(np.unique(child[:8])) <= {0.0, 1.0, 2.0}
        assert np.all((child[8:] >= 1e-3) & (child[8:] <= 1.0))

    def test_fcn_mutation_rate(self, rng):
        """Per-dimension mutation can be switched off or applied to every weight"""
        genotype = np.zeros(FCN_PARAMETERS)
        untouched = mutate_genotype(genotype, FCN_SPACE, GaConfig(gene_mutation_prob=0.0), rng)
        np.testing.assert_array_equal(untouched, genotype)
        everything = mutate_genotype(genotype, FCN_SPACE, GaConfig(mutate_all_dimensions=True), rng)
        assert np.count_nonzero(everything) == FCN_PARAMETERS
        assert np.all(genotype == 0.0)

    def test_elites_lead_next_generation(self, rng):
        """The best genotypes are carried over first and unchanged"""
        config = GaConfig(pop=6, elites=2)
        pop = np.arange(6, dtype=float)[:, None] * np.ones((6, 3))
        fitness = np.array([0.0, 5.0, 1.0, 4.0, 2.0, 3.0])
        new_pop, n_elites = next_generation(pop, fitness, FCN_SPACE, config, rng)
        assert n_elites == 2
        assert new_pop.shape == (6, 3)
        np.testing.assert_array_equal(new_pop[0], pop[1])
        np.testing.assert_array_equal(new_pop[1], pop[3])


class TestGaTraining:
    """Tests for GA training runs"""

    def test_learns_target_table(self, rng):
        """The GA improves the agreement with a target rule table"""
        config = GaConfig(pop=30, elites=4, stall=80, max_generations=80)
        result = ga_train(RULE_SPACE, config, None, rng, fitness_fn=rule_matches)
        assert result.best_fitness >= result.trace["best"].iloc[0]
        assert result.best_fitness >= 7
        assert result.best_fitness == rule_matches(result.best[None, :])[0]
        assert np.all(np.diff(result.trace["best_ever"]) >= 0)
        assert isinstance(result.controller(), RuleTable)

    def test_stops_when_stalled(self, rng):
        """Training ends after ``stall`` generations without improvement"""
        config = GaConfig(pop=8, elites=2, stall=3, max_generations=100)
        result = ga_train(FCN_SPACE, config, None, rng, fitness_fn=lambda g: np.zeros(len(g)))
        assert len(result.trace) == 4
        assert list(result.trace.columns) == ["run", "generation", "best", "mean", "best_ever"]

    def test_needs_environment(self, rng):
        """Simulation fitness needs a training environment"""
        with pytest.raises(ConfigurationError):
            ga_train(RULE_SPACE, GaConfig(), None, rng)

    def test_simulated_fitness(self, short_reversal, rng):
        """A short GA run on simulated fitness returns a rule table"""
        config = GaConfig(pop=4, elites=1, max_generations=1)
        result = ga_train(RULE_SPACE, config, short_reversal, rng, params=EvoParams(m=10), replicates=2)
        assert result.algorithm == "ga"
        assert len(result.trace) == 2
        assert isinstance(result.controller(), RuleTable)

    def test_best_of_runs(self):
        """Merging keeps the best genotype and every trace"""
        def result(fitness):
            trace = pd.DataFrame({"run": [0], "generation": [0], "best": [fitness], "mean": [fitness],
                                  "best_ever": [fitness]})
            return TrainingResult(FCN_SPACE, "ga", np.full(3, fitness), fitness, trace)

        merged = best_of_runs([result(1.0), result(3.0), result(2.0)])
        assert merged.best_fitness == 3.0
        assert merged.runs == 3
        assert merged.run_best == [1.0, 3.0, 2.0]
        assert list(merged.trace["run"]) == [0, 1, 2]

    def test_best_of_no_runs(self):
        """Merging nothing is an error"""
        with pytest.raises(ConfigurationError):
            best_of_runs([])


class TestDifferentialEvolution:
    """Tests for rand/1/bin differential evolution"""

    def test_config_from_defaults(self, default_config):
        """Defaults come from optimizers.de"""
        config = DeConfig.from_config(default_config)
        assert (config.F, config.CR, config.pop) == (0.5, 0.1, 50)

    @pytest.mark.parametrize("kwargs", [{"F": -1.0}, {"CR": 2.0}, {"pop": 3}, {"init_low": 1.0}])
    def test_validation(self, kwargs):
        """Invalid DE settings are configuration errors"""
        with pytest.raises(ConfigurationError):
            DeConfig(**kwargs)

    def test_donors_use_other_members(self, rng):
        """With F = 0 every donor is another member of the population"""
        pop = np.arange(5, dtype=float)[:, None] * np.ones((5, 2))
        donors = rand1_donors(pop, 0.0, rng)
        for i, donor in enumerate(donors):
            assert donor[0] != i
            assert donor[0] in pop[:, 0]

    def test_crossover_rates(self, rng):
        """CR = 0 takes exactly one donor gene per row; CR = 1 takes them all"""
        targets, donors = np.zeros((4, 6)), np.ones((4, 6))
        np.testing.assert_array_equal(binomial_crossover(targets, donors, 0.0, rng).sum(axis=1), 1)
        np.testing.assert_array_equal(binomial_crossover(targets, donors, 1.0, rng), donors)

    def test_improves_sphere(self, rng):
        """Greedy replacement never loses the best and improves it"""
        config = DeConfig(F=0.5, CR=0.9, pop=10, stall=50, max_generations=40)
        result = de_train(config, None, rng, fitness_fn=negative_sphere, dim=5)
        assert result.algorithm == "de"
        assert result.best_fitness > result.trace["best_ever"].iloc[0]
        assert np.all(np.diff(result.trace["best_ever"]) >= 0)
        assert result.best_fitness == pytest.approx(negative_sphere(result.best[None, :])[0])

    def test_wrong_dimension_for_simulation(self, short_reversal, rng):
        """Simulated fitness needs full network genotypes"""
        with pytest.raises(ConfigurationError):
            de_train(DeConfig(pop=4), short_reversal, rng, dim=5)

    def test_needs_environment(self, rng):
        """Simulation fitness needs a training environment"""
        with pytest.raises(ConfigurationError):
            de_train(DeConfig(pop=4), None, rng)

"""
Tests for meta-strategy dispatch, controllers and controller files
"""

import dataclasses

import numpy as np
import pytest

from meta_social_learning.context.context_encoding import Context, ContextParams, ContextStats
from meta_social_learning.strategies.meta_strategies import (
    ALL_META_KINDS,
    FCN_PARAMETERS,
    FIXED_PROBABILITIES,
    ControllerState,
    FCNWeights,
    MetaController,
    MetaKind,
    MetaSettings,
    RuleTable,
    StepContext,
    StrategyBanditState,
    StrategyKind,
    all_rule_tables,
    bandit_update,
    create_controller,
    dispatch_strategies,
    get_supported_meta_kinds,
    load_controller,
    msl_bandit_select,
    msl_ec_conf,
    msl_ec_conf_unc,
    msl_ec_succ,
    msl_fcn,
    msl_fixed,
    msl_qlearn,
    msl_rule_table,
    qlearn_update,
    register_controller,
    rule_table_from_dispatcher,
    save_controller,
    ucb_select_rows,
    update_controllers,
)
from meta_social_learning.utils.errors import ConfigurationError

IL, SUCC, CONF = StrategyKind.INDIVIDUAL, StrategyKind.SUCCESS, StrategyKind.CONFORMIST


def ctx(ec=0, conf=0, unc=0, mu=(1.0, 0.4), sigma=(0.05, 0.05)):
    return Context(ec, conf, unc, 0.0, np.array(mu), np.array(sigma))


def step_for(ec=0, conf=0, unc=0):
    """StepContext whose default thresholds reproduce the requested flags."""
    mu_now = np.array([1.0, 0.4])
    mu_past = np.array([0.5, 0.4]) if ec else mu_now.copy()
    counts = np.array([8, 2]) if conf else np.array([2, 8])
    stats = ContextStats(mu_now, np.array([0.05, 0.05]), counts, mu_past, 0.5 if unc else 0.0)
    return StepContext(stats, 2, ContextParams())


class TestMetaKind:
    """Tests for meta-strategy names"""

    def test_thirteen_kinds(self):
        """There are thirteen meta-strategies with stable codes"""
        assert len(ALL_META_KINDS) == 13
        assert MetaKind.IL_ONLY.code == 0
        assert MetaKind.SL_NE.code == 12

    def test_parse_names_and_alias(self):
        """Kinds parse from labels, enum names and the legacy alias"""
        assert MetaKind.parse("SL-EC-Conf-Unc") is MetaKind.SL_EC_CONF_UNC
        assert MetaKind.parse("sl_ucb") is MetaKind.SL_UCB
        assert MetaKind.parse("SL-EC-Unc") is MetaKind.SL_EC_SUCC

    def test_parse_unknown(self):
        """Unknown names are configuration errors"""
        with pytest.raises(ConfigurationError):
            MetaKind.parse("SL-Magic")

    def test_strategy_parse(self):
        """Strategies parse from labels and codes"""
        assert StrategyKind.parse("Conformist") is CONF
        assert StrategyKind.parse(1) is SUCC
        assert StrategyKind.parse("individual") is IL


class TestContextDispatchers:
    """Tests for the hand-designed context rules"""

    def test_ec_conf_unc_truth_table(self):
        """IL after change, conform when C, success when certain, otherwise IL"""
        assert msl_ec_conf_unc(ctx(ec=1, conf=1)) == IL
        assert msl_ec_conf_unc(ctx(conf=1, unc=1)) == CONF
        assert msl_ec_conf_unc(ctx()) == SUCC
        assert msl_ec_conf_unc(ctx(unc=1)) == IL

    def test_ec_conf(self):
        """SL-EC-Conf conforms only without change and with conformity"""
        assert msl_ec_conf(ctx(conf=1)) == CONF
        assert msl_ec_conf(ctx()) == IL
        assert msl_ec_conf(ctx(ec=1, conf=1)) == IL

    def test_ec_succ(self):
        """SL-EC-Succ copies success only when certain and stable"""
        assert msl_ec_succ(ctx()) == SUCC
        assert msl_ec_succ(ctx(unc=1)) == IL
        assert msl_ec_succ(ctx(ec=1)) == IL

    def test_fixed_probabilities_sum_to_one(self):
        """Every baseline distribution is a probability vector"""
        for probabilities in FIXED_PROBABILITIES.values():
            assert sum(probabilities) == pytest.approx(1.0)

    def test_fixed_frequencies(self, rng):
        """SL-Prop draws IL about 10% of the time"""
        draws = [msl_fixed(MetaKind.SL_PROP, rng) for _ in range(5000)]
        assert np.mean([d == IL for d in draws]) == pytest.approx(0.10, abs=0.015)

    def test_fixed_rejects_learning_kind(self, rng):
        """Only baselines have fixed probabilities"""
        with pytest.raises(ConfigurationError):
            msl_fixed(MetaKind.SL_QL, rng)


class TestRuleTable:
    """Tests for evolved rule tables"""

    def test_table_reproduces_dispatcher(self):
        """A table built from a dispatcher agrees with it on all states"""
        table = rule_table_from_dispatcher(msl_ec_conf_unc)
        for ec in (0, 1):
            for conf in (0, 1):
                for unc in (0, 1):
                    c = ctx(ec, conf, unc)
                    assert msl_rule_table(table, c) == msl_ec_conf_unc(c)

    def test_genotype(self):
        """Ten genes: eight strategies then th_ec and th_u"""
        table = RuleTable((IL,) * 8, 0.2, 0.05)
        genotype = table.to_genotype()
        assert genotype.size == 10
        assert RuleTable.from_genotype(genotype) == table

    def test_wrong_rule_count(self):
        """Tables need exactly eight rules"""
        with pytest.raises(ConfigurationError):
            RuleTable((IL,) * 7)

    def test_enumeration_size(self):
        """There are 3^8 rule tables"""
        assert sum(1 for _ in all_rule_tables()) == 3 ** 8


class TestFCN:
    """Tests for the 6-12-3 network"""

    def test_parameter_count(self):
        """12 x 7 hidden plus 3 x 13 output weights"""
        assert FCN_PARAMETERS == 123
        assert FCNWeights.zeros().size == 123

    def test_flat_layout(self):
        """from_flat and flat agree on the weight order"""
        values = np.arange(FCN_PARAMETERS, dtype=float) / 100
        assert np.array_equal(FCNWeights.from_flat(values).flat(), values)

    def test_zero_weights_tie_to_il(self):
        """Equal outputs pick the lowest strategy index"""
        assert msl_fcn(FCNWeights.zeros(), np.zeros(2), np.zeros(2), np.array([0.5, 0.5])) == IL

    def test_output_bias_selects_strategy(self):
        """A positive conformist bias makes the network conform"""
        weights = FCNWeights.zeros()
        output = weights.output.copy()
        output[2, -1] = 1.0
        assert msl_fcn(FCNWeights(weights.hidden, output), np.zeros(2), np.zeros(2), np.ones(2)) == CONF

    def test_nan_inputs_are_zeroed(self):
        """Missing estimates do not propagate NaN"""
        out = FCNWeights.from_flat(np.full(FCN_PARAMETERS, 0.1)).forward(np.zeros(6))
        assert np.all(np.isfinite(out))
        assert msl_fcn(FCNWeights.zeros(), np.array([np.nan, 1.0]), np.array([np.nan, np.nan]),
                       np.array([0.0, 1.0])) == IL

    def test_batch_forward(self):
        """Batch inputs give one output row per input"""
        out = FCNWeights.zeros().forward(np.zeros((4, 6)))
        assert out.shape == (4, 3)

    def test_wrong_genotype_size(self):
        """Genotypes of the wrong length are rejected"""
        with pytest.raises(ConfigurationError):
            FCNWeights.from_flat(np.zeros(10))

    def test_unknown_activation(self):
        """Only the supported activations are accepted"""
        with pytest.raises(ConfigurationError):
            FCNWeights.zeros(activation="softsign")


class TestBanditControllers:
    """Tests for bandit and Q-learning choice and updates"""

    def test_ucb_tries_unvisited_first(self):
        """Unvisited strategies win, lowest index first"""
        choice = ucb_select_rows(np.array([[5.0, 0.0, 0.0]]), np.array([[3.0, 0.0, 0.0]]), 1.0)
        assert choice[0] == 1

    def test_ucb_bonus(self):
        """Rarely tried strategies get a larger bonus"""
        choice = ucb_select_rows(np.array([[0.5, 0.45, 0.0]]), np.array([[100.0, 1.0, 100.0]]), 1.0)
        assert choice[0] == 1

    def test_bandit_update(self):
        """The chosen strategy's value moves towards its reward"""
        state = StrategyBanditState()
        bandit_update(state, SUCC, 1.0, beta=0.5)
        assert state.q[1] == 0.5
        assert state.counts[1] == 1

    def test_bandit_select_greedy(self, rng):
        """SL-RL with epsilon 0 exploits"""
        state = StrategyBanditState(q=np.array([0.0, 0.0, 1.0]))
        assert msl_bandit_select(state, MetaKind.SL_RL, rng, epsilon=0.0) == CONF

    def test_qlearn_update(self):
        """Q(s, a) += alpha (r + gamma max Q(s') - Q(s, a))"""
        state = StrategyBanditState()
        state.ql[3, 1] = 1.0
        qlearn_update(state, 0, 2, 1.0, 3, alpha=0.5, gamma=0.5)
        assert state.ql[0, 2] == pytest.approx(0.75)

    def test_qlearn_select_by_state(self, rng):
        """Q-learning reads the row of the current context state"""
        state = StrategyBanditState()
        state.ql[5, 2] = 1.0
        assert msl_qlearn(state, ctx(ec=1, unc=1), 0.0, rng) == CONF


class TestPopulationControllers:
    """Tests for controllers acting on blocks of agents"""

    def test_create_every_kind(self):
        """Every kind has a controller once trained controllers are supplied"""
        settings = MetaSettings(rule_table=rule_table_from_dispatcher(msl_ec_conf_unc),
                                fcn_weights=FCNWeights.zeros())
        for kind in ALL_META_KINDS:
            assert create_controller(kind, settings).kind is kind
        assert len(get_supported_meta_kinds()) == 13

    def test_sl_ga_needs_table(self):
        """SL-GA without a rule table is a configuration error"""
        with pytest.raises(ConfigurationError):
            create_controller(MetaKind.SL_GA, MetaSettings())

    def test_register_rejects_non_controller(self):
        """Only MetaController subclasses can be registered"""
        with pytest.raises(ConfigurationError):
            register_controller(MetaKind.SL_RL, dict)

    def test_register_custom_controller(self):
        """A registered controller replaces the built-in one"""
        class AlwaysConform(MetaController):
            def select(self, step, idx, state, rng):
                return np.full(idx.size, int(CONF))

        from meta_social_learning.strategies import meta_strategies
        original = meta_strategies.META_CONTROLLERS[MetaKind.SL_RAND]
        try:
            register_controller("SL-Rand", AlwaysConform)
            controller = create_controller(MetaKind.SL_RAND, MetaSettings())
            assert isinstance(controller, AlwaysConform)
        finally:
            meta_strategies.META_CONTROLLERS[MetaKind.SL_RAND] = original

    def test_dispatch_mixed_population(self, rng):
        """Each agent is dispatched by its own kind's controller"""
        settings = MetaSettings()
        kinds = np.array([MetaKind.IL_ONLY.code, MetaKind.SL_EC_CONF_UNC.code, MetaKind.SL_EC_CONF.code])
        controllers = {ALL_META_KINDS[c]: create_controller(ALL_META_KINDS[c], settings) for c in kinds}
        strategies = dispatch_strategies(kinds, step_for(conf=1), ControllerState(3), controllers, rng)
        np.testing.assert_array_equal(strategies, [IL, CONF, CONF])

    def test_context_rules_use_step_context(self, rng):
        """SL-EC-Conf-Unc switches to IL when the step reports a change"""
        controller = create_controller(MetaKind.SL_EC_CONF_UNC, MetaSettings())
        idx = np.arange(4)
        assert np.all(controller.select(step_for(ec=1), idx, ControllerState(4), rng) == IL)
        assert np.all(controller.select(step_for(), idx, ControllerState(4), rng) == SUCC)

    def test_empty_step_is_state_zero(self, rng):
        """Without observable information SL-EC-Conf-Unc copies success"""
        controller = create_controller(MetaKind.SL_EC_CONF_UNC, MetaSettings())
        step = StepContext(None, 2, ContextParams())
        assert np.all(controller.select(step, np.arange(2), ControllerState(2), rng) == SUCC)

    def test_bandit_learns_best_strategy(self, rng):
        """SL-RL rows move towards the strategy that pays"""
        settings = MetaSettings(rl_epsilon=0.0)
        controller = create_controller(MetaKind.SL_RL, settings)
        state = ControllerState(2)
        idx = np.arange(2)
        kinds = np.full(2, MetaKind.SL_RL.code)
        controllers = {MetaKind.SL_RL: controller}
        update_controllers(kinds, np.array([2, 2]), np.array([1.0, 1.0]), state, controllers)
        np.testing.assert_array_equal(controller.select(step_for(), idx, state, rng), [2, 2])

    def test_qlearning_deferred_update(self, rng):
        """The reward of step t is credited when step t + 1 is selected"""
        settings = MetaSettings(ql_epsilon=0.0, ql_alpha=0.5)
        controller = create_controller(MetaKind.SL_QL, settings)
        state = ControllerState(1)
        idx = np.arange(1)
        first = controller.select(step_for(), idx, state, rng)
        controller.update(idx, first, np.array([2.0]), state)
        controller.select(step_for(), idx, state, rng)
        assert state.ql_q[0, 0, int(first[0])] == pytest.approx(1.0)

    def test_state_take_and_reset(self):
        """Offspring copy parent rows; reset clears learning"""
        state = ControllerState(3)
        state.bandit_q[1] = [1.0, 2.0, 3.0]
        child = state.take(np.array([1, 1, 0]))
        np.testing.assert_array_equal(child.bandit_q[0], [1.0, 2.0, 3.0])
        child.reset(np.array([0]))
        assert np.all(child.bandit_q[0] == 0.0)
        assert np.all(child.bandit_q[1] == [1.0, 2.0, 3.0])


class TestControllerFiles:
    """Tests for YAML controller files"""

    def test_rule_table_file(self, tmp_path):
        """Rule tables written to disk load back unchanged"""
        table = RuleTable((SUCC, IL, CONF, CONF, IL, IL, IL, IL), 0.15, 0.05)
        path = tmp_path / "table.yaml"
        save_controller(str(path), table)
        assert load_controller(str(path)) == table

    def test_fcn_file(self, tmp_path):
        """Network weights written to disk load back unchanged"""
        weights = FCNWeights.from_flat(np.linspace(-1, 1, FCN_PARAMETERS), "relu")
        path = tmp_path / "fcn.yaml"
        save_controller(str(path), weights)
        loaded = load_controller(str(path))
        np.testing.assert_allclose(loaded.flat(), weights.flat())
        assert loaded.activation == "relu"

    def test_reference_controllers(self):
        """The packaged SL-GA table follows SL-EC-Conf-Unc with th_u 0.05"""
        table = load_controller("controllers/sl_ga_reference.yaml")
        assert table.th_u == 0.05
        assert table == rule_table_from_dispatcher(msl_ec_conf_unc, 0.15, 0.05)
        assert isinstance(load_controller("controllers/sl_ne_reference.yaml"), FCNWeights)

    def test_reference_controllers_are_untrained(self):
        """Packaged controllers are hand-set and say so"""
        assert load_controller("controllers/sl_ga_reference.yaml").trained is False
        assert load_controller("controllers/sl_ne_reference.yaml").trained is False

    def test_trained_flag_survives_files(self, tmp_path):
        """The trained flag is written and read back; files without it count as trained"""
        untrained = dataclasses.replace(FCNWeights.zeros(), trained=False)
        save_controller(str(tmp_path / "fcn.yaml"), untrained)
        assert load_controller(str(tmp_path / "fcn.yaml")).trained is False

        table = RuleTable((SUCC, IL, CONF, CONF, IL, IL, IL, IL), 0.15, 0.05)
        save_controller(str(tmp_path / "table.yaml"), table)
        assert load_controller(str(tmp_path / "table.yaml")).trained is True

        from meta_social_learning.strategies.meta_strategies import controller_from_dict
        legacy = controller_from_dict({"meta_kind": "SL-GA", "rules": ["IL"] * 8, "th_ec": 0.15, "th_u": 0.05})
        assert legacy.trained is True

    def test_missing_field(self):
        """Incomplete controller files are configuration errors"""
        from meta_social_learning.strategies.meta_strategies import controller_from_dict
        with pytest.raises(ConfigurationError):
            controller_from_dict({"meta_kind": "SL-GA", "rules": ["IL"] * 8})

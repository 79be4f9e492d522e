"""
Strategies module for meta-social-learning

The thirteen meta-social learning strategies, their controllers and the
controller file format.
"""

from .meta_strategies import (
    StrategyKind,
    MetaKind,
    ALL_META_KINDS,
    FIXED_PROBABILITIES,
    RuleTable,
    FCNWeights,
    FCN_PARAMETERS,
    StrategyBanditState,
    MetaSettings,
    ControllerState,
    StepContext,
    MetaController,
    META_CONTROLLERS,
    msl_ec_conf_unc,
    msl_ec_conf,
    msl_ec_succ,
    msl_fixed,
    msl_rule_table,
    msl_bandit_select,
    msl_qlearn,
    msl_fcn,
    bandit_update,
    qlearn_update,
    ucb_select_rows,
    fcn_inputs,
    rule_table_from_dispatcher,
    all_rule_tables,
    create_controller,
    register_controller,
    get_supported_meta_kinds,
    dispatch_strategies,
    update_controllers,
    save_controller,
    load_controller,
    controller_to_dict,
    controller_from_dict,
)

__all__ = [
    "StrategyKind",
    "MetaKind",
    "ALL_META_KINDS",
    "FIXED_PROBABILITIES",
    "RuleTable",
    "FCNWeights",
    "FCN_PARAMETERS",
    "StrategyBanditState",
    "MetaSettings",
    "ControllerState",
    "StepContext",
    "MetaController",
    "META_CONTROLLERS",
    "msl_ec_conf_unc",
    "msl_ec_conf",
    "msl_ec_succ",
    "msl_fixed",
    "msl_rule_table",
    "msl_bandit_select",
    "msl_qlearn",
    "msl_fcn",
    "bandit_update",
    "qlearn_update",
    "ucb_select_rows",
    "fcn_inputs",
    "rule_table_from_dispatcher",
    "all_rule_tables",
    "create_controller",
    "register_controller",
    "get_supported_meta_kinds",
    "dispatch_strategies",
    "update_controllers",
    "save_controller",
    "load_controller",
    "controller_to_dict",
    "controller_from_dict",
]

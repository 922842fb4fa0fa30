import json

from ._rplab import (
    Action,
    ActionSpace,
    ConfigError,
    DomainError,
    IntractableError,
    TabularMdp,
    action_distance,
    check_em_membership,
    divergence,
    dp_sufficient_delta,
    govern,
    min_gap,
    perturbation,
    policy_count,
    policy_value,
    raw_distance,
    required_delta,
    verify_decomposition,
)
from . import _rplab


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def validate_config(config):
    return json.loads(_rplab.validate_config(_text(config)))


def run_experiment(config):
    """Train every condition of a config; returns {label: {"reports", "aggregate"}}."""
    return json.loads(_rplab.run_experiment(_text(config)))


def generate_targets(config):
    return json.loads(_rplab.generate_targets(_text(config)))


def tabular_mdp(environment):
    return _rplab.tabular_mdp(_text(environment))

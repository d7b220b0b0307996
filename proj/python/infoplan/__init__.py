"""Python access to the infoplan core."""

import json

from ._infoplan import (
    Belief,
    ContractViolation,
    Fluent,
    Layout,
    UnsupportedUpdate,
    jeffrey_update,
    marginal,
    score,
    weighted_entropy,
    weighted_gain,
)
from . import _infoplan


def run_experiment(config):
    """Run known-score trials from a config dict; returns summary statistics."""
    return _infoplan.run_experiment(json.dumps(config))


def run_learning_experiment(config, baseline=False):
    """Run online learning from a config dict; returns the per-episode curve."""
    return _infoplan.run_learning_experiment(json.dumps(config), baseline)

"""Attention-guided multivariate time series anomaly detector."""

import json

from ._core import AxonadError, Detector, auc_pr, auc_roc, evaluate, robust_z, tail_bounds
from . import _core

__all__ = [
    "AxonadError",
    "Detector",
    "auc_pr",
    "auc_roc",
    "default_config",
    "evaluate",
    "generate_synthetic",
    "robust_z",
    "tail_bounds",
    "train",
]


def default_config():
    """Run configuration with every default, as a nested dict."""
    return json.loads(_core.default_config())


def _dump(config):
    return "" if config is None else json.dumps(config)


def generate_synthetic(config=None):
    """Returns (values, labels, intervals); `config` is a run config dict."""
    return _core.generate_synthetic(_dump(config))


def train(values, config=None, on_epoch=None):
    """Trains a detector on the training segment of `values` (N x F)."""
    return Detector.train(values, _dump(config), on_epoch)

"""Python bindings for the carfollow simulator, reward and learner."""

import json
import os

from ._carfollow import (
    ConfigError,
    Env,
    SimulationError,
    bcm_accel,
    f_comfort,
    f_eff,
    f_safety,
    idm_accel,
    idm_equilibrium_gap,
    presets,
    retarget_u,
    unilateral_accel,
)
from . import _carfollow


def _strings(overrides):
    # Config values are strings; numbers are passed through repr() to keep every digit.
    return {k: v if isinstance(v, str) else repr(v) for k, v in (overrides or {}).items()}


def default_config(preset):
    return json.loads(_carfollow.default_config_json(preset))


def simulate(preset, out, overrides=None):
    """Runs one episode; returns the metrics.json document."""
    return json.loads(_carfollow.simulate_json(preset, _strings(overrides), os.fspath(out)))


def perturb(out, overrides=None, preset="perturbation"):
    return json.loads(_carfollow.perturb_json(preset, _strings(overrides), os.fspath(out)))


def train(preset, out, overrides=None):
    """Trains DDPG; returns the per-episode curve."""
    return json.loads(_carfollow.train_json(preset, _strings(overrides), os.fspath(out)))


def evaluate(preset, out, overrides=None):
    return json.loads(_carfollow.eval_json(preset, _strings(overrides), os.fspath(out)))


__all__ = [
    "ConfigError", "Env", "SimulationError", "bcm_accel", "default_config", "evaluate",
    "f_comfort", "f_eff", "f_safety", "idm_accel", "idm_equilibrium_gap", "perturb", "presets",
    "retarget_u", "simulate", "train", "unilateral_accel",
]

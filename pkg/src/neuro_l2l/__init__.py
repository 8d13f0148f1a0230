"""Learning-to-learn around an emulated spiking reinforcement-learning agent."""

from __future__ import annotations

from .baselines import gittins_table, value_iteration
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .emulator import EmulatorConfig, Mode, run_trial, select_action
from .environments import MabFamily, MdpFamily, sample_mab, sample_mdp
from .hyperparams import HyperParams, HyperSpace, space_for
from .l2l import Experiment, evaluate_fitness, evaluate_theta, random_theta_baseline, run_l2l
from .optimizers import OptimizerSpec
from .plasticity import AnnRule, Td1Rule, TdLambdaRule, TdParams

__all__ = [
    "AnnRule",
    "ConfigError",
    "EmulatorConfig",
    "Experiment",
    "ExperimentConfig",
    "HyperParams",
    "HyperSpace",
    "MabFamily",
    "MdpFamily",
    "Mode",
    "OptimizerSpec",
    "Td1Rule",
    "TdLambdaRule",
    "TdParams",
    "evaluate_fitness",
    "evaluate_theta",
    "gittins_table",
    "load_config",
    "parse_config",
    "random_theta_baseline",
    "run_l2l",
    "run_trial",
    "sample_mab",
    "sample_mdp",
    "select_action",
    "space_for",
    "value_iteration",
]

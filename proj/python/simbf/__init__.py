# SPDX-License-Identifier: Apache-2.0
"""Stacked intelligent metasurface beamforming for wideband MIMO-OFDM."""

import json as _json
from typing import Any, Mapping, Optional, Union

import numpy as _np

from . import _core
from ._core import ConfigError, OutputExists, capacity, derive_seed, trial_seeds

__all__ = [
    "ConfigError",
    "OutputExists",
    "capacity",
    "derive_seed",
    "fit_trial",
    "run_experiment",
    "spectral_efficiency",
    "trial_seeds",
    "validate_config",
    "waterfill",
]

Config = Union[str, Mapping[str, Any]]


def _text(config: Config) -> str:
    return config if isinstance(config, str) else _json.dumps(config)


def waterfill(gains, sigma2: float, total_power: float):
    """Returns (powers, level)."""
    powers, level = _core.waterfill([float(g) for g in gains], sigma2, total_power)
    return _np.asarray(powers), level


def spectral_efficiency(H, target, powers, alpha: float, sigma2: float, achieved: bool = False) -> float:
    return _core.spectral_efficiency(
        _np.asarray(H, dtype=complex),
        _np.asarray(target, dtype=float),
        _np.asarray(powers, dtype=float),
        alpha,
        sigma2,
        achieved,
    )


def validate_config(config: Config) -> list:
    return _core.validate_config(_text(config))


def run_experiment(
    config: Config,
    output_dir: Optional[str] = None,
    workers: Optional[int] = None,
    trials: Optional[int] = None,
    overwrite: bool = False,
) -> dict:
    return _core.run_experiment(_text(config), output_dir, workers, trials, overwrite)


def fit_trial(config: Config, trial: int = 0) -> dict:
    return _core.fit_trial(_text(config), trial)

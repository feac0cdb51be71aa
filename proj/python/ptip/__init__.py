"""Phase-tipping experiments on forced predator-prey models."""

import json

from ._core import (
    ConfigError,
    LimitCycle,
    MayParams,
    NoCycleError,
    NotBistable,
    BracketError,
    PtipError,
    RmaParams,
    State,
    allee_threshold,
    census_label,
    classify_basin,
    detect_cycle_disappearance,
    detect_hopf,
    equilibria,
    find_limit_cycle,
    invariant_measure,
    marginal_r2,
    phase_of,
    preset_model,
    preset_names,
    run_command,
    run_monte_carlo,
    sample_signal,
    vector_field,
    with_r,
)
from ._core import resolved_config as _resolved_config


def resolved_config(preset=None, overrides=()):
    """Fully resolved configuration tree as a dict."""
    return json.loads(_resolved_config(preset, list(overrides)))


__all__ = [name for name in dir() if not name.startswith("_")]

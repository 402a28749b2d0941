"""Python front end for the sgl core library.

Configs may be given as JSON text, a dict, or a path to a JSON file.
"""
import json
import os

from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    NumericalError,
    ParameterError,
    SaturationError,
    artifact_version,
    derive_seed,
    plot_selectors,
)
from . import _core

__all__ = [
    "ConfigError", "DimensionError", "DomainError", "NumericalError", "ParameterError",
    "SaturationError", "artifact_version", "derive_seed", "plot_selectors",
    "validate_config", "run", "load_manifest", "plot_data", "weights",
    "control_forward", "control_backward", "simulate",
]


def _text(config):
    if config is None:
        return "{}"
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        return _core.load_config(os.fspath(config))
    return config


def validate_config(config=None):
    """Canonical JSON of a validated config (every field, fixed key order)."""
    return json.loads(_core.validate_config(_text(config)))


def run(config=None, problem=None, seed=None, out=None):
    """Run a pipeline; returns the manifest as a dict. Errors are recorded, not raised."""
    return _core.run(_text(config), problem, seed, None if out is None else os.fspath(out))


def load_manifest(out_dir):
    return _core.load_manifest(os.fspath(out_dir))


def plot_data(out_dir, selector):
    return _core.plot_data(os.fspath(out_dir), selector)


def weights(config=None, variant="forward", eps=0.0):
    return _core.weights(_text(config), variant, eps)


def control_forward(config=None, eps=None):
    return _core.control_forward(_text(config), eps)


def control_backward(config=None, eps=None):
    return _core.control_backward(_text(config), eps)


def simulate(config=None):
    return _core.simulate(_text(config))

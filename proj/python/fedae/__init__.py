"""Python bindings for the fedae federated autoencoder simulator."""

import json as _json
import os as _os

from ._fedae import (
    ACTIVITY_CODES,
    ConfigError,
    DataError,
    NumericError,
    ParamSet,
    ShapeError,
    __version__,
    build_autoencoder,
    build_classifier,
    classify,
    confusion,
    encode,
    fedavg,
    macro_f1,
    partition_indices,
    reconstruct,
    split_sizes,
)
from . import _fedae


def _config_text(config):
    """Accepts a dict, a JSON string or a path to a JSON file."""
    if isinstance(config, dict):
        return _json.dumps(config), "."
    if isinstance(config, (str, _os.PathLike)) and _os.path.isfile(config):
        with open(config, encoding="utf-8") as f:
            return f.read(), _os.path.dirname(_os.path.abspath(config))
    return str(config), "."


def resolve_config(config):
    """Fully resolved config, with every default filled in."""
    text, base = _config_text(config)
    return _json.loads(_fedae.resolve_config(text, base))


def synthetic_clients(config=None, seed=0):
    """Labeled windows of every synthetic client, as dicts of numpy arrays."""
    text, _ = _config_text(config or {})
    return _fedae.synthetic_clients(text, seed)


def generate_dataset(config):
    """Writes the synthetic clients and a manifest; returns the manifest path."""
    text, base = _config_text(config)
    return _fedae.generate_dataset(text, base)


def run_experiment(config):
    """Runs one arm end to end. Artifacts land in the config's output_dir."""
    text, base = _config_text(config)
    out = _fedae.run_experiment(text, base)
    out["report"] = _json.loads(out["report"])
    return out

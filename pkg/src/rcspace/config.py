"""Single JSON config file with per-module sections and strict keys.

Defaults follow the full-scale experiment values; any key present in
the file must be a known key of its section, and unknown sections or
keys fail before any computation starts.
"""

from __future__ import annotations

import copy
import json
import os

from .exceptions import ConfigurationError
from .measures import MeasureConfig
from .search import NsParams
from .substrates import EchoStateNetwork, MackeyGlassReservoir

DEFAULTS = {
    "substrate": {
        "kind": "esn",
        # recurrent-network keys
        "n_nodes": 50,
        "n_inputs": 1,
        "w_range": [-0.5, 0.5],
        "w_in_range": [-1.0, 1.0],
        "w_scaling_range": [0.0, 2.0],
        "input_scaling_range": [-1.0, 1.0],
        "sparsity_range": [0.0, 1.0],
        # delay-line keys
        "n_virtual": 400,
        "theta": 0.2,
        "time_scale": 1.0,
        "eta_range": [0.0, 1.0],
        "gamma_range": [0.0, 1.0],
        "p_range": [0.0, 20.0],
        "mask_values": [-0.1, 0.1],
        "steps_per_node": 4,
        # shared
        "washout": 50,
    },
    "measures": {
        "m": None,
        "stream_length": 100,
        "washout": 50,
        "gr_noise": 0.1,
        "svd_threshold": 1e-6,
        "mc_max_delay": None,
        "mc_washout": 500,
        "mc_train": 1000,
        "mc_test": 1000,
        "mc_ridge": 1e-8,
        "seed": None,
    },
    "search": {
        "generations": 2000,
        "population": 200,
        "deme": 40,
        "recombination_rate": 0.5,
        "mutation_rate": 0.1,
        "rho_min": 3.0,
        "rho_min_interval": 200,
        "k_nearest": 15,
        "archive_random_add_prob": 0.0,
        "archive_max_size": None,
        "runs": 1,
    },
    "quality": {
        "voxel_edge": 10.0,
        "curve_interval": 200,
    },
    "tasks": {
        "length": 6000,
        "ridge_grid": [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0],
        "splits": [0.5, 0.25, 0.25],
        "laser_path": None,
    },
    "learning": {
        "hidden_units": 10,
        "epochs": 1000,
        "ensemble": 10,
        "train_fraction": 0.7,
        "threshold": None,
    },
}

ESN_KEYS = ("kind", "n_nodes", "n_inputs", "washout", "w_range", "w_in_range", "w_scaling_range", "input_scaling_range", "sparsity_range")
DR_KEYS = ("kind", "n_virtual", "theta", "time_scale", "washout", "eta_range", "gamma_range", "p_range", "mask_values", "steps_per_node")


def load_config(path: str | None = None) -> dict:
    """Defaults merged with the optional config file; strict on keys."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(user, dict):
        raise ConfigurationError(f"{path}: top level must be an object of sections")
    for section, values in user.items():
        if section not in cfg:
            raise ConfigurationError(f"{path}: unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ConfigurationError(f"{path}: section {section!r} must be an object")
        for key, value in values.items():
            if key not in cfg[section]:
                raise ConfigurationError(f"{path}: unknown key {section}.{key}")
            cfg[section][key] = value
    return cfg


def build_substrate(section: dict):
    kind = section.get("kind", "esn")
    if kind == "esn":
        keys = ESN_KEYS
        cls = EchoStateNetwork
    elif kind in ("dr", "delay"):
        keys = DR_KEYS
        cls = MackeyGlassReservoir
    else:
        raise ConfigurationError(f"unknown substrate kind {kind!r}; choose esn or dr")
    kwargs = {k: section[k] for k in keys if k != "kind"}
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in kwargs.items()}
    return cls(**kwargs)


def build_measure_config(section: dict, default_seed: int) -> MeasureConfig:
    seed = section.get("seed")
    return MeasureConfig(
        m=section["m"],
        stream_length=section["stream_length"],
        washout=section["washout"],
        gr_noise=section["gr_noise"],
        svd_threshold=section["svd_threshold"],
        mc_max_delay=section["mc_max_delay"],
        mc_washout=section["mc_washout"],
        mc_train=section["mc_train"],
        mc_test=section["mc_test"],
        mc_ridge=section["mc_ridge"],
        seed=int(default_seed) if seed is None else int(seed),
    )


def build_ns_params(section: dict) -> NsParams:
    return NsParams(
        generations=section["generations"],
        population=section["population"],
        deme=section["deme"],
        recombination_rate=section["recombination_rate"],
        mutation_rate=section["mutation_rate"],
        rho_min=section["rho_min"],
        rho_min_interval=section["rho_min_interval"],
        k_nearest=section["k_nearest"],
        archive_random_add_prob=section["archive_random_add_prob"],
        archive_max_size=section["archive_max_size"],
    )

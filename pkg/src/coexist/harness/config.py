"""Experiment configuration: JSON schema, defaults and resolution."""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from ..errors import ContractError

KINDS = ("autocorr", "surface-tension", "dilution", "gap", "barrier", "xlambda", "es-check", "axiom-check")

_rate = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["metropolis", "heat_bath", "custom"]},
        "table_h": {"type": "array", "items": {"type": "number"}},
        "table_rate": {"type": "array", "items": {"type": "number", "minimum": 0}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_disorder = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "bernoulli", "discrete"]},
        "value": {"type": "number", "minimum": 0, "maximum": 1},
        "p_zero": {"type": "number", "minimum": 0, "maximum": 1},
        "support": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "probs": {"type": "array", "items": {"type": "number", "minimum": 0}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_profile = {
    "type": "object",
    "properties": {"repr": {"enum": ["plus", "disk", "square", "rect", "disk_cap", "polygon", "grid"]},
                   "params": {"type": "object"}},
    "required": ["repr"],
    "additionalProperties": False,
}

_tension = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["isotropic", "l1", "table"]},
        "value": {"type": "number", "exclusiveMinimum": 0},
        "angles": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_rate_fn = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["bernoulli_bound", "table"]},
        "p_zero": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "tau_nodes": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "tau_min": {"type": ["number", "null"]},
        "tau_q": {"type": ["number", "null"]},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_candidate = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "profile": _profile,
        "tau_r": {"type": "number", "exclusiveMinimum": 0},
        "tau_q": _tension,
        "rate_model": _rate_fn,
        "barrier": {"type": "number", "minimum": 0},
        "k": {"type": "integer", "minimum": 1},
    },
    "required": ["profile", "tau_r", "tau_q", "rate_model"],
    "additionalProperties": False,
}

_pos_int = {"type": "integer", "minimum": 1}
_num_list = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "d": {"type": "integer", "minimum": 1, "maximum": 3},
        "N": {"type": "integer", "minimum": 0},
        "Ns": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "beta": {"type": "number", "minimum": 0},
        "betas": _num_list,
        "rate": _rate,
        "rates": {"type": "array", "items": _rate},
        "disorder": _disorder,
        "dilute": _disorder,
        "compare": {"type": "boolean"},
        "lam": {"type": "number", "minimum": 0},
        "times": _num_list,
        "sizes": _num_list,
        "replicas": {"type": "integer", "minimum": 2},
        "n_initial": {"type": "integer", "minimum": 2},
        "n_disorder": _pos_int,
        "exact_cap": {"type": "integer", "minimum": 0},
        "burn_in": {"type": ["number", "null"], "minimum": 0},
        "fit_window": {"type": ["array", "null"], "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": ["auto", "exact", "mc"]},
        "mc_budget": _pos_int,
        "profile": _profile,
        "tau_r": {"type": "number", "exclusiveMinimum": 0},
        "tau_q": _tension,
        "rate_model": _rate_fn,
        "k": _pos_int,
        "margin": {"type": "integer", "minimum": 0},
        "method": {"enum": ["bisect", "widest", "both"]},
        "candidates": {"type": "array", "items": _candidate},
        "lambdas": _num_list,
        "draws": _pos_int,
        "mixing": {"type": "boolean"},
        "probe_times": _num_list,
        "boxes": {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_HEAT = {"kind": "heat_bath"}

DEFAULTS: dict[str, dict] = {
    "autocorr": {
        "seed": 0, "d": 2, "N": 1, "beta": 0.5, "rate": _HEAT, "disorder": {"kind": "constant", "value": 1.0},
        "compare": False, "dilute": {"kind": "bernoulli", "p_zero": 0.15},
        "lam": 1.0, "times": [0.0, 0.5, 1.0, 2.0, 4.0, 8.0], "replicas": 8, "n_initial": 32,
        "n_disorder": 1, "exact_cap": 12, "burn_in": None, "fit_window": None,
    },
    "surface-tension": {
        "seed": 0, "d": 2, "beta": 1.0, "disorder": {"kind": "bernoulli", "p_zero": 0.1},
        "sizes": [2, 3, 4], "replicas": 3, "delta": 0.5, "mode": "auto", "mc_budget": 2000,
    },
    "dilution": {
        "seed": 0, "d": 2, "profile": {"repr": "square", "params": {"center": [0.5, 0.5], "side": 0.5}},
        "tau_r": 0.5, "rate_model": {"kind": "bernoulli_bound", "p_zero": 0.36787944117144233},
    },
    "gap": {
        "seed": 0, "d": 2, "N": 1, "beta": 0.5, "rate": _HEAT, "disorder": {"kind": "constant", "value": 1.0},
        "mixing": True, "probe_times": [0.1, 0.5, 1.0, 2.0, 5.0],
    },
    "barrier": {
        "seed": 0, "profile": {"repr": "disk", "params": {"center": [0.5, 0.5], "r": 0.25}},
        "tau_r": 0.5, "tau_q": {"kind": "isotropic", "value": 1.0}, "k": 1, "margin": 0, "method": "both",
    },
    "xlambda": {
        "seed": 0, "d": 2, "lambdas": [0.0, 1.0],
        "candidates": [
            {"name": "disk", "profile": {"repr": "disk", "params": {"center": [0.5, 0.5], "r": 0.25}},
             "tau_r": 0.5, "tau_q": {"kind": "isotropic", "value": 1.0},
             "rate_model": {"kind": "bernoulli_bound", "p_zero": 0.36787944117144233}},
            {"name": "square", "profile": {"repr": "square", "params": {"center": [0.5, 0.5], "side": 0.5}},
             "tau_r": 0.5, "tau_q": {"kind": "l1"},
             "rate_model": {"kind": "bernoulli_bound", "p_zero": 0.36787944117144233}},
        ],
    },
    "es-check": {
        "seed": 0, "draws": 5, "disorder": {"kind": "discrete", "support": [0.0, 0.5, 1.0], "probs": [0.2, 0.3, 0.5]},
        "betas": [0.2, 2.0],
        "boxes": [[[0, 0]], [[0, 0], [1, 0]], [[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 0], [0, 1], [1, 1]],
                  [[0, 0], [1, 0], [2, 0], [3, 0]]],
    },
    "axiom-check": {
        "seed": 0, "d": 2, "N": 1, "beta": 0.7, "disorder": {"kind": "bernoulli", "p_zero": 0.3},
        "rates": [{"kind": "heat_bath"}, {"kind": "metropolis"}],
    },
}


def validate(config: dict) -> None:
    """Raise ``ContractError`` with the schema message if ``config`` is invalid."""
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ContractError(f"config invalid at {path}: {exc.message}") from None


def resolve(config: dict, seed: int | None = None) -> dict:
    """Validate and fill defaults for the config's kind; ``seed`` overrides the file."""
    validate(config)
    out = copy.deepcopy(DEFAULTS[config["kind"]])
    out.update(copy.deepcopy(config))
    if seed is not None:
        out["seed"] = int(seed)
    validate(out)
    return out


def load(path) -> dict:
    with open(Path(path)) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: not valid JSON ({exc})") from None

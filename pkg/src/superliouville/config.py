"""Run configuration: strict JSON schema, loading and object builders."""
import json

import jsonschema
import numpy as np

from .errors import ConfigError
from .geometry import Grid

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec2 = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_complex = {"oneOf": [_num, _vec2]}

_defs = {
    "grid": {
        "type": "object",
        "additionalProperties": False,
        "required": ["half_width", "n"],
        "properties": {
            "half_width": _pos,
            "n": {"type": "integer", "minimum": 3},
            "center": _vec2,
        },
    },
    "solution": {
        "type": "object",
        "additionalProperties": False,
        "required": ["family"],
        "properties": {
            "family": {"enum": ["scalar_bubble", "spinor_bubble", "sphere_killing"]},
            "center": _vec2,
            "scale": _pos,
            "spin_direction": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2},
        },
    },
    "perturbation": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "noise_u": {"type": "number", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "psi_sign": {"type": "array", "items": {"enum": [-1, 1]}, "minItems": 2, "maxItems": 2},
        },
    },
    "gate": {
        "type": "object",
        "additionalProperties": False,
        "minProperties": 1,
        "properties": {"max": _num, "min": _num, "target": _num, "rel_tol": _pos, "abs_tol": _pos},
    },
    "diagnostics": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "tail": {"enum": ["none", "fitted"]},
            "annulus": _vec2,
            "fields": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        },
    },
    "solver": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "tol_residual": _pos,
            "max_iters": {"type": "integer", "minimum": 1},
            "damping": {"enum": ["none", "backtracking"]},
            "linear_tol": _pos,
            "gauge": {"enum": ["none", "pin_node"]},
            "pin_index": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
    },
    "initial": {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind"],
        "properties": {
            "kind": {"enum": ["library", "constant", "file"]},
            "u": _num,
            "psi": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2},
            "boundary_C": _num,
            "dir": {"type": "string", "minLength": 1},
        },
    },
    "sequence": {
        "type": "object",
        "additionalProperties": False,
        "required": ["family", "count"],
        "properties": {
            "family": {"enum": ["scalar_bubble", "spinor_bubble", "sphere_killing"]},
            "count": {"type": "integer", "minimum": 2},
            "base": _pos,
            "center": _vec2,
            "spin_direction": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2},
        },
    },
    "blowup": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "epsilon0": _num,
            "delta": _pos,
            "window": {"type": "integer", "minimum": 2},
            "floor": _num,
            "mass_tolerance": {"type": "number", "minimum": 0},
        },
    },
    "kelvin": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "grid": {"$ref": "#/$defs/grid"},
            "r_min": _pos,
            "r_max": _pos,
            "spinor_law": {"enum": ["inverse_radius", "clifford"]},
        },
    },
}

_common = {
    "grid": {"$ref": "#/$defs/grid"},
    "solution": {"$ref": "#/$defs/solution"},
    "metric": {"enum": ["flat", "sphere"]},
    "diagnostics": {"$ref": "#/$defs/diagnostics"},
    "gates": {"type": "object", "additionalProperties": {"$ref": "#/$defs/gate"}},
}


def _schema(required, extra=()):
    props = dict(_common)
    for key in extra:
        props[key] = {"$ref": f"#/$defs/{key}"}
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "additionalProperties": False,
        "required": list(required),
        "properties": props,
        "$defs": _defs,
    }


SCHEMAS = {
    "verify": _schema(["grid", "solution"], ["perturbation"]),
    "solve": _schema(["grid"], ["perturbation", "solver", "initial"]),
    "blowup": _schema(["grid", "sequence"], ["sequence", "blowup"]),
    "export": _schema(["grid", "solution"], ["perturbation"]),
    "kelvin": _schema(["grid", "solution"], ["perturbation", "kelvin"]),
}
SCHEMAS["export"]["required"].append("diagnostics")


def validate(config, command):
    """Raise :class:`ConfigError` unless ``config`` matches the command schema."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return config


def load(path, command):
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return validate(config, command)


def build_grid(block):
    return Grid.square(block["half_width"], block["n"], tuple(block.get("center", (0.0, 0.0))))


def to_complex(values):
    """``[a, [re, im]]`` style entries to a complex vector."""
    if values is None:
        return None
    return np.array([complex(*v) if isinstance(v, list) else complex(v) for v in values])

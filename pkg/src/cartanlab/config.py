"""Experiment configuration: JSON schema, validation, canonical serialization.

Precedence is flag > file > preset default.  Unknown keys are rejected
(additionalProperties: false throughout) and every stochastic entry point
demands an explicit seed.  Canonical serialization sorts keys and uses
shortest round-trip float representations so reruns are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .errors import ConfigError

_TOLERANCES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "exponent_match": {"type": "number", "exclusiveMinimum": 0},
        "exponent_sum": {"type": "number", "exclusiveMinimum": 0},
        "pesin_gap": {"type": "number", "exclusiveMinimum": 0},
        "equivariance": {"type": "number", "exclusiveMinimum": 0},
        "second_generator": {"type": "number", "exclusiveMinimum": 0},
        "oracle_distance": {"type": "number", "exclusiveMinimum": 0},
        "chart_residual": {"type": "number", "exclusiveMinimum": 0},
        "affinity": {"type": "number", "exclusiveMinimum": 0},
        "slope_match": {"type": "number", "exclusiveMinimum": 0},
        "leaf_inclusion_factor": {"type": "number", "exclusiveMinimum": 0},
        "fiber_delta": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["action"],
    "properties": {
        "action": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"type": "string"},
                "generators": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "integer"}},
                    },
                },
                "box_radius": {"type": "integer", "minimum": 1},
            },
        },
        "perturbation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": {"type": "number"},
                "modes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["freq"],
                        "properties": {
                            "freq": {"type": "array", "items": {"type": "integer"}},
                            "cos": {"type": "array", "items": {"type": "number"}},
                            "sin": {"type": "array", "items": {"type": "number"}},
                        },
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid_n": {"type": "integer", "minimum": 4},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "interpolation": {"enum": ["cubic", "linear"]},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "orbit_steps": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "sign_check_steps": {"type": "integer", "minimum": 1},
                "sign_check_trials": {"type": "integer", "minimum": 1},
                "leaves": {"type": "integer", "minimum": 1},
                "leaf_radius": {"type": "number", "exclusiveMinimum": 0},
                "leaf_step": {"type": "number", "exclusiveMinimum": 0},
                "direction_depth": {"type": "integer", "minimum": 10},
                "exponent_elements": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"}},
                },
                "fiber_targets": {"type": "integer", "minimum": 1},
                "tolerances": _TOLERANCES_SCHEMA,
            },
        },
        "weyl": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "search_radius": {"type": "integer", "minimum": 1},
                "degeneracy_cutoff": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration (attribute access over the dict)."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict, defaults: dict | None = None) -> "ExperimentConfig":
        merged = _deep_merge(defaults, raw) if defaults else dict(raw)
        try:
            jsonschema.validate(merged, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
        return cls(data=merged)

    @classmethod
    def from_file(cls, path, defaults: dict | None = None) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, defaults)

    def merged_with(self, override: dict) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(_deep_merge(self.data, override))

    def section(self, name: str) -> dict:
        return dict(self.data.get(name, {}))

    @property
    def seed(self) -> int | None:
        return self.data.get("seed")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is mandatory for stochastic runs "
                              "(set \"seed\" in the config or pass --seed)")
        return int(self.seed)

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"


def format_real(x: float) -> str:
    """IEEE-754 double printed with 17 significant digits."""
    return format(float(x), ".17g")

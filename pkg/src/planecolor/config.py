"""JSON configuration: schema validation and flag merging.

A config file holds one object per subcommand plus a ``common`` block;
every CLI flag can be supplied from the file, and explicit CLI flags win
over file values, which win over defaults.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

_WINDOW_SCHEMA = {
    "type": "object",
    "properties": {
        "x_min": {"type": "number"},
        "x_max": {"type": "number"},
        "y_min": {"type": "number"},
        "y_max": {"type": "number"},
        "topology": {"enum": ["plane", "torus"]},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "common": {
            "type": "object",
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
                "window": _WINDOW_SCHEMA,
            },
            "additionalProperties": False,
        },
        "color": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["elementary", "spacetime"]},
                "seeds": {"type": "string"},
                "n": {"type": "integer", "minimum": 2},
                "t1": {"type": "number"},
                "t2": {"type": "number"},
                "resolution": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "ea": {
            "type": "object",
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "until_t": {"type": "number"},
                "replicates": {"type": "integer", "minimum": 1},
                "chi_samples": {"type": "integer", "minimum": 0},
                "level_b": {"type": "number"},
                "area_samples": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "coalesce": {
            "type": "object",
            "properties": {
                "separation": {"type": "number", "exclusiveMinimum": 0},
                "t0": {"type": "number", "minimum": 0},
                "replicates": {"type": "integer", "minimum": 1},
                "max_steps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "merge": {
            "type": "object",
            "properties": {
                "t_from": {"type": "number"},
                "t_to": {"type": "number"},
                "n_init": {"type": "integer", "minimum": 2},
                "resolution": {"type": "integer", "minimum": 2},
                "snapshot_times": {"type": "string"},
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "dim": {
            "type": "object",
            "properties": {
                "input_ppm": {"type": "string"},
                "scales": {"type": "string"},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {
                "criteria": {"type": "string"},
                "seed": {"type": "integer", "minimum": 0},
                "out_dir": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def load_config(path) -> dict:
    """Load and schema-validate a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    cfg = json.loads(text)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


def merge_options(defaults: dict, config: dict, cli: dict) -> dict:
    """defaults < config-file values < explicitly passed CLI flags."""
    merged = dict(defaults)
    merged.update({k: v for k, v in config.items() if v is not None})
    merged.update({k: v for k, v in cli.items() if v is not None})
    return merged

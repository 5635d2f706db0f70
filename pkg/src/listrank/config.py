"""Defaults for the CLI and the server, overridable from a JSON file."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Dict, Optional

from .core import ValidationError

DEFAULTS: Dict[str, Any] = {
    "window": 20,
    "step": 10,
    "alpha": 1.0,
    "depth": None,
    "model": "gpt-4o-mini-2024-07-18",
    "prices": None,
    "template": None,
    "max_passage_bytes": None,
    "workers": 1,
    "oracle_latency": {"per_call": 0.0, "per_input_token": 0.0, "per_output_token": 0.0},
    "live": {},
}


def load_config(path: Optional[str | Path] = None) -> Dict[str, Any]:
    config = copy.deepcopy(DEFAULTS)
    if path is None:
        return config
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, value in data.items():
        if isinstance(config[key], dict) and isinstance(value, dict):
            config[key].update(value)
        else:
            config[key] = value
    return config

"""Named model and regression presets stored as JSON files.

Built-in presets ship inside the package. A directory named by the
``PQDLAB_PRESET_DIR`` environment variable is searched first, so a user file
with the same name overrides the built-in one.
"""
from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

from ..core_types import WeightScheme
from ..exceptions import ConfigError, DomainError
from ..pqd_generators import SequenceModel
from ..regression_estimators import RegressionSpec

ENV_VAR = "PQDLAB_PRESET_DIR"


def _builtin_dir() -> Path:
    return Path(str(resources.files("pqdlab") / "presets"))


def search_path():
    dirs = []
    env = os.environ.get(ENV_VAR)
    if env:
        dirs.append(Path(env))
    dirs.append(_builtin_dir())
    return dirs


def available(kind=None):
    """Sorted preset names, optionally restricted to ``kind`` (``model`` or ``regression``)."""
    names = set()
    for d in search_path():
        if d.is_dir():
            for f in d.glob("*.json"):
                if kind is None or load_raw(f.stem).get("type") == kind:
                    names.add(f.stem)
    return sorted(names)


def load_raw(name: str) -> dict:
    for d in search_path():
        f = d / f"{name}.json"
        if f.is_file():
            try:
                data = json.loads(f.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"preset {name!r} ({f}): invalid JSON at line {exc.lineno}: {exc.msg}") from None
            if data.get("type") not in ("model", "regression"):
                raise ConfigError(f"preset {name!r} ({f}): 'type' must be 'model' or 'regression'")
            return data
    raise ConfigError(f"unknown preset {name!r}; searched {', '.join(str(d) for d in search_path())}")


def load_model(name: str):
    """``(SequenceModel, WeightScheme or None)`` for a model preset."""
    data = load_raw(name)
    if data["type"] != "model":
        raise ConfigError(f"preset {name!r} is a {data['type']} preset, expected a model preset")
    try:
        model = SequenceModel.from_dict(data["model"], name=name)
        w = data.get("weights")
        weights = WeightScheme(**w) if w is not None else None
    except (KeyError, TypeError, DomainError) as exc:
        raise ConfigError(f"preset {name!r}: {exc}") from None
    return model, weights


def load_regression(name: str) -> RegressionSpec:
    data = load_raw(name)
    if data["type"] != "regression":
        raise ConfigError(f"preset {name!r} is a {data['type']} preset, expected a regression preset")
    try:
        return RegressionSpec.from_dict(data, name=name)
    except (KeyError, TypeError, DomainError) as exc:
        raise ConfigError(f"preset {name!r}: {exc}") from None

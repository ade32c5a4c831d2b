"""Experiment configuration: parsing, schema validation and normalisation.

Two equivalent surface syntaxes are accepted.

Sectioned text (INI style, ``#`` starts a comment)::

    [experiment]
    kind = slln
    master_seed = 42

    [model]
    preset = paper_bernoulli

    [slln]
    normalizer = mz_p(1.5)
    n_max = 16384

JSON with the same sections as top-level objects::

    {"experiment": {"kind": "slln", "master_seed": 42},
     "model": {"preset": "paper_bernoulli"}}

Validation collects every problem before failing; each message names the
section and key and, for text input, the line number. Unknown sections and
keys are errors. The normalised form has every default filled in.
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass

from ..core_types import Marginal, WeightScheme
from ..dependence_metrics import CONDITION_IDS
from ..exceptions import ConfigError, DomainError
from ..pqd_generators import RhoProfile, SequenceModel
from ..slln_lab import NormalizerKind
from . import presets

__all__ = ["KINDS", "dump_text", "config_hash", "load_config", "model_from_config", "parse_config", "validate"]

KINDS = ("sample", "diagnose", "conditions", "slln", "regress")
FORMATS = ("csv", "json")
_REQUIRED = object()
_SERIES_IDS = tuple(c for c in CONDITION_IDS if not c.startswith("t4"))


# ---------------------------------------------------------------------------
# value parsers; each takes the raw value (str from text, any JSON value) and
# returns the normalised value or raises ValueError with a readable message


def _int(lo=None, hi=None):
    def parse(v):
        if isinstance(v, bool):
            raise ValueError("expected an integer")
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError(f"expected an integer, got {v!r}")
            v = int(v)
        if isinstance(v, str):
            try:
                v = int(v.strip().replace("_", ""), 0)
            except ValueError:
                raise ValueError(f"expected an integer, got {v!r}") from None
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            raise ValueError(f"must be <= {hi}, got {v}")
        return int(v)

    return parse


def _float(check=None, msg=""):
    def parse(v):
        if isinstance(v, bool):
            raise ValueError("expected a number")
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ValueError(f"expected a number, got {v!r}") from None
        if not math.isfinite(f):
            raise ValueError("must be finite")
        if check is not None and not check(f):
            raise ValueError(f"{msg}, got {f!r}")
        return f

    return parse


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("true", "yes", "on", "1"):
        return True
    if s in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {v!r}")


def _str(v):
    if not isinstance(v, str) or not v.strip():
        raise ValueError("expected a non-empty string")
    return v.strip()


def _choice(options):
    def parse(v):
        s = _str(v)
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {s!r}")
        return s

    return parse


def _list(item):
    def parse(v):
        if isinstance(v, str):
            parts = [p.strip() for p in v.split(",") if p.strip()]
        elif isinstance(v, (list, tuple)):
            parts = list(v)
        else:
            parts = [v]
        if not parts:
            raise ValueError("expected a non-empty list")
        return [item(p) for p in parts]

    return parse


def _normalizer(v):
    try:
        return str(NormalizerKind.parse(_str(v)))
    except DomainError as exc:
        raise ValueError(str(exc)) from None


def _pair(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        k, j = (int(x) for x in v)
    else:
        m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", str(v))
        if not m:
            raise ValueError(f"pairs are written k-j, got {v!r}")
        k, j = int(m.group(1)), int(m.group(2))
    if not 1 <= k < j:
        raise ValueError(f"pairs need 1 <= k < j, got {k}-{j}")
    return [k, j]


def _p_range(f):
    return 1.0 < f < 2.0


SCHEMA = {
    "experiment": {
        "kind": (_choice(KINDS), None),
        "master_seed": (_int(0, 2**64 - 1), _REQUIRED),
        "out": (_str, "pqdlab-out"),
        "formats": (_list(_choice(FORMATS)), ["csv"]),
        "svg": (_bool, False),
        "workers": (_int(1), None),
    },
    "model": {
        "preset": (_str, None),
        "family": (_choice(("independent", "gaussian_copula", "fgm_copula", "paper_bernoulli")), None),
        "marginal": (_choice(("bernoulli_half", "uniform01", "standard_normal", "centered_pareto", "point_mass")), None),
        "marginal_param": (_float(), None),
        "rho_profile": (_choice(("exchangeable", "geometric", "second_index")), None),
        "rho_value": (_float(lambda f: 0.0 <= f < 1.0, "must lie in [0, 1)"), None),
        "theta": (_float(lambda f: 0.0 <= f <= 1.0, "must lie in [0, 1]"), None),
        "theta_decay": (_float(lambda f: 0.0 <= f <= 1.0, "must lie in [0, 1]"), None),
    },
    "weights": {
        "kind": (_choice(("constant", "bounded_sinusoid", "signed_alternating", "custom_table", "power")), "constant"),
        "c": (_float(), None),
        "base": (_float(), None),
        "amplitude": (_float(), None),
        "exponent": (_float(), None),
        "values": (_list(_float()), None),
    },
    "sample": {
        "n": (_int(1), 1024),
        "paths": (_int(1), 1),
    },
    "diagnose": {
        "pairs_list": (_list(_pair), [[1, 2]]),
        "t": (_list(_float(lambda f: f > 0, "truncation levels must be > 0")), [0.5, 1.0, 2.0]),
        "pairs": (_int(1000), 100000),
        "bootstrap": (_int(2), 64),
    },
    "conditions": {
        "ids": (_list(_choice(_SERIES_IDS)), ["c2_2"]),
        "K": (_int(2), 100),
        "T": (_float(lambda f: f > 1, "must be > 1"), 1e9),
        "tolerance": (_float(lambda f: f > 0, "must be > 0"), 1e-6),
        "p": (_float(_p_range, "moment order must satisfy 1 < p < 2"), 1.5),
        "C": (_float(lambda f: f > 0, "must be > 0"), 1.0),
        "empirical_budget": (_int(1000), 20000),
    },
    "slln": {
        "normalizer": (_normalizer, "kolmogorov_n"),
        "n_max": (_int(1024), 16384),
        "paths": (_int(30), 100),
        "probe": (_bool, False),
    },
    "regress": {
        "preset": (_str, _REQUIRED),
        "n_grid": (_list(_int(2)), [1000, 10000, 100000]),
        "replicates": (_int(1), 200),
    },
}

_NEEDS = {
    "sample": ("model", "sample"),
    "diagnose": ("model", "diagnose"),
    "conditions": ("model", "conditions"),
    "slln": ("model", "slln"),
    "regress": ("regress",),
}


# ---------------------------------------------------------------------------
# surface syntax


@dataclass
class _Raw:
    data: dict  # section -> key -> raw value
    lines: dict  # (section, key) -> line number; sections keyed by (section, None)
    source: str  # "text" or "json"


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _parse_text(text: str) -> _Raw:
    cp = configparser.ConfigParser(
        interpolation=None,
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        strict=True,
        empty_lines_in_values=False,
        default_section="\x00defaults",
    )
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        msg = str(exc).replace("\n", " ")
        raise ConfigError([f"syntax error: {msg}"]) from None
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = no
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            lines.setdefault((section, m.group(1).strip()), no)
    data = {s: dict(cp.items(s)) for s in cp.sections()}
    return _Raw(data, lines, "text")


def _parse_json(text: str) -> _Raw:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}: invalid JSON: {exc.msg}"]) from None
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise ConfigError(["JSON config must be an object of section objects"])
    return _Raw(data, {}, "json")


def parse_config(text: str, fmt=None) -> _Raw:
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "text"
    return _parse_json(text) if fmt == "json" else _parse_text(text)


# ---------------------------------------------------------------------------
# validation


def _where(raw: _Raw, section, key=None):
    if raw.source == "json":
        return f"{section}.{key}" if key else section
    no = raw.lines.get((section, key)) or raw.lines.get((section, None))
    loc = f"[{section}] {key}" if key else f"[{section}]"
    return f"line {no}: {loc}" if no else loc


def validate(source, kind=None, overrides=None):
    """Validate and normalise a configuration.

    Parameters
    ----------
    source : str or dict
        Config text (sectioned or JSON) or an already-parsed dict.
    kind : str, optional
        Experiment kind requested by the caller (e.g. the CLI subcommand);
        must agree with ``experiment.kind`` when both are given.
    overrides : dict, optional
        ``{(section, key): value}`` applied after parsing (command-line flags).

    Returns
    -------
    dict
        Section -> key -> value with defaults filled.

    Raises
    ------
    ConfigError
        With one message per problem.
    """
    raw = _Raw(copy.deepcopy(source), {}, "json") if isinstance(source, dict) else parse_config(source)
    errors = []
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            raw.data.setdefault(section, {})[key] = value
    for section in raw.data:
        if section not in SCHEMA:
            errors.append(f"{_where(raw, section)}: unknown section (expected one of {', '.join(SCHEMA)})")
    exp = raw.data.get("experiment", {})
    cfg_kind = exp.get("kind")
    if kind is not None and cfg_kind is not None and str(cfg_kind).strip() != kind:
        errors.append(f"{_where(raw, 'experiment', 'kind')}: config is for {cfg_kind!r} but {kind!r} was requested")
    if kind is not None:
        raw.data.setdefault("experiment", {})["kind"] = kind
    out = {}
    for section, fields in SCHEMA.items():
        given = raw.data.get(section)
        if given is None:
            continue
        vals = {}
        for key, value in given.items():
            if key not in fields:
                errors.append(f"{_where(raw, section, key)}: unknown key (expected one of {', '.join(fields)})")
                continue
            try:
                vals[key] = fields[key][0](value)
            except ValueError as exc:
                errors.append(f"{_where(raw, section, key)}: {exc}")
        out[section] = vals
    exp = out.setdefault("experiment", {})
    if "kind" not in exp and not any(e.startswith(_where(raw, "experiment", "kind")) for e in errors):
        errors.append(f"{_where(raw, 'experiment', 'kind')}: missing required field (one of {', '.join(KINDS)})")
    kind = exp.get("kind")
    needed = _NEEDS.get(kind, ())
    for section in needed:
        out.setdefault(section, {})
    for section, vals in out.items():
        for key, (_, default) in SCHEMA[section].items():
            if key in vals:
                continue
            if default is _REQUIRED:
                if not any(e.startswith(_where(raw, section, key)) for e in errors):
                    errors.append(f"{_where(raw, section, key)}: missing required field")
            elif default is not None:
                vals[key] = copy.deepcopy(default)
    if "model" in out:
        errors.extend(_check_model(raw, out["model"]))
    if "weights" in out:
        errors.extend(_check_weights(raw, out["weights"]))
    if "slln" in out:
        n_max = out["slln"].get("n_max")
        if n_max is not None and n_max & (n_max - 1):
            errors.append(f"{_where(raw, 'slln', 'n_max')}: must be a power of two >= 1024, got {n_max}")
    if "regress" in out and "preset" in out["regress"]:
        try:
            presets.load_regression(out["regress"]["preset"])
        except ConfigError as exc:
            errors.extend(f"{_where(raw, 'regress', 'preset')}: {e}" for e in exc.errors)
    if errors:
        raise ConfigError(errors)
    return out


def _check_model(raw, m):
    errs = []
    inline = [k for k in m if k != "preset"]
    if "preset" in m and inline:
        errs.append(f"{_where(raw, 'model')}: give either preset or an inline model, not both (extra: {', '.join(inline)})")
        return errs
    if "preset" in m:
        try:
            presets.load_model(m["preset"])
        except ConfigError as exc:
            errs.extend(f"{_where(raw, 'model', 'preset')}: {e}" for e in exc.errors)
        return errs
    if "family" not in m:
        errs.append(f"{_where(raw, 'model')}: need preset or family")
        return errs
    try:
        _inline_model(m)
    except DomainError as exc:
        errs.append(f"{_where(raw, 'model')}: {exc}")
    return errs


def _inline_model(m) -> SequenceModel:
    kind = m.get("marginal", "standard_normal" if m["family"] == "gaussian_copula" else "uniform01")
    marginal = Marginal(kind, m.get("marginal_param"))
    rho = None
    if m["family"] == "gaussian_copula":
        if "rho_profile" not in m or "rho_value" not in m:
            raise DomainError("gaussian_copula needs rho_profile and rho_value")
        rho = RhoProfile(m["rho_profile"], m["rho_value"])
    return SequenceModel(m["family"], marginal, rho, m.get("theta", 0.0), m.get("theta_decay", 1.0))


def _check_weights(raw, w):
    try:
        scheme = _weights(w)
    except (DomainError, TypeError) as exc:
        return [f"{_where(raw, 'weights')}: {exc}"]
    w.clear()
    w.update(scheme.to_dict())
    return []


def _weights(w) -> WeightScheme:
    args = {k: v for k, v in w.items() if k != "values"}
    return WeightScheme(values=tuple(w.get("values") or ()), **args)


def model_from_config(cfg):
    """``(SequenceModel, WeightScheme)`` described by a normalised config."""
    m = cfg["model"]
    preset_weights = None
    if "preset" in m:
        model, preset_weights = presets.load_model(m["preset"])
    else:
        model = _inline_model(m)
    if "weights" in cfg:
        weights = _weights(cfg["weights"])
    else:
        weights = preset_weights or WeightScheme.constant(1.0)
    return model, weights


def load_config(path, kind=None, overrides=None):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return validate(text, kind, overrides)


def _hashable(cfg):
    c = copy.deepcopy(cfg)
    # where and how fast a run happens does not change what it computes
    c.get("experiment", {}).pop("workers", None)
    c.get("experiment", {}).pop("out", None)
    return c


def config_hash(cfg) -> str:
    """SHA-256 of the canonical JSON of a normalised config, ignoring worker count and output directory."""
    blob = json.dumps(_hashable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _text_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(f"{x[0]}-{x[1]}" if isinstance(x, list) else _text_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_text(cfg) -> str:
    """Render a normalised config back into the sectioned text syntax."""
    out = []
    for section in SCHEMA:
        if section not in cfg:
            continue
        out.append(f"[{section}]")
        for key in SCHEMA[section]:
            if key in cfg[section]:
                out.append(f"{key} = {_text_value(cfg[section][key])}")
        out.append("")
    return "\n".join(out)


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))

"""Config handling, run manifests, and bit-stable serialization.

Configs are flat INI files with one section per concern; unknown
sections or keys are errors, missing keys take the documented defaults.
All floating-point output uses the shortest round-trip representation
(repr), so emitted files are reproducible and diffable; manifests carry
the full resolved parameter set so any run can be replayed
byte-identically.
"""

from __future__ import annotations

import configparser
import datetime
import hashlib
import json
import math
from pathlib import Path

__version__ = "0.1.0"
TOOL_NAME = "atomol"


class ConfigError(Exception):
    """Invalid, unknown, or malformed configuration input."""


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [p.strip() for p in str(text).split(",")]
    return [float(p) for p in parts if p]


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "float": float,
    "int": int,
    "str": str,
    "bool": _parse_bool,
    "floatlist": _float_list,
}

# section -> key -> (type name, default)
SCHEMA = {
    "model": {
        "v": ("float", 1.0),
        "u": ("float", 0.0),
        "r": ("float", 0.0),
        "gamma_a": ("float", 0.0),
        "gamma_b": ("float", 0.0),
    },
    "reduced": {
        "c": ("float", 0.0),
        "omega": ("float", 1.0),
        "r": ("float", 0.0),
        "gamma": ("float", 0.0),
    },
    "integrator": {
        "method": ("str", "rk45"),
        "rtol": ("float", 1e-11),
        "atol": ("float", 1e-11),
        "dt": ("float", 1e-3),
        "t_final": ("float", 10.0),
        "record_every": ("int", 1),
    },
    "initial": {
        "a0_sq": ("float", 1.0),
        "theta0": ("float", 0.0),
    },
    "scan": {
        "c_min": ("float", 0.0),
        "c_max": ("float", 3.0),
        "r_min": ("float", -2.0),
        "r_max": ("float", 2.0),
        "resolution_c": ("int", 200),
        "resolution_r": ("int", 200),
        "refine_tol": ("float", 1e-3),
    },
    "sweep": {
        "betas": ("floatlist", [0.1, 0.2, 0.5, 1.0]),
        "gammas": ("floatlist", [-0.5, 0.0, 0.5]),
        "r_max": ("float", 5.0),
    },
    "trap": {
        "gamma": ("float", -0.5),
        "a0_sq": ("float", 0.9),
        "theta0": ("float", math.pi),
        "t_span": ("float", 20.0),
    },
    "portrait": {
        "n_s": ("int", 5),
        "n_theta": ("int", 8),
        "t_span": ("float", 20.0),
    },
    "output": {
        "path": ("str", "out"),
        "format": ("str", "csv"),
    },
}


def default_config() -> dict:
    """Fully populated config with every documented default."""
    return {f"{sec}.{key}": default
            for sec, keys in SCHEMA.items()
            for key, (_type, default) in keys.items()}


def _parse_value(section: str, key: str, raw):
    try:
        type_name, _ = SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"unknown config key [{section}] {key}") from None
    try:
        return _PARSERS[type_name](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            f"bad value for [{section}] {key}: {raw!r} ({exc})") from None


def load_config(path) -> dict:
    """Parse an INI config file against the schema (strict keys)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser[section].items():
            values[f"{section}.{key}"] = _parse_value(section, key, raw)
    return values


def serialize_config(values: dict) -> str:
    """Render a flat config dict back to INI text."""
    by_section: dict[str, dict] = {}
    for flat_key, val in values.items():
        section, key = flat_key.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        by_section.setdefault(section, {})[key] = val
    lines = []
    for section in SCHEMA:
        if section not in by_section:
            continue
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            if key in by_section[section]:
                lines.append(f"{key} = {format_value(by_section[section][key])}")
        lines.append("")
    return "\n".join(lines)


def resolve_config(file_values: dict | None = None,
                   overrides: dict | None = None) -> dict:
    """defaults < config file < explicit overrides."""
    resolved = default_config()
    for source in (file_values or {}), (overrides or {}):
        for flat_key, val in source.items():
            section, key = flat_key.split(".", 1)
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")
            resolved[flat_key] = val
    return resolved


def format_value(val) -> str:
    """Shortest round-trip text form of a config/output value."""
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(float(val))  # plain float: numpy scalars repr differently
    if isinstance(val, (list, tuple)):
        return ",".join(format_value(v) for v in val)
    return str(val)


def write_csv(path, header, rows):
    """Write rows of already-typed values with repr-exact floats."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, obj):
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_table(directory, stem, header, rows, fmt):
    """Write a table as stem.csv or stem.json depending on fmt."""
    directory = Path(directory)
    if fmt == "csv":
        out = directory / f"{stem}.csv"
        write_csv(out, header, rows)
    elif fmt == "json":
        out = directory / f"{stem}.json"
        records = [dict(zip(header, row)) for row in rows]
        write_json(out, records)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    return out


def config_digest(command: str, parameters: dict) -> str:
    """Stable digest of the fully resolved run parameters."""
    canonical = json.dumps({"command": command, "parameters": parameters},
                           sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_manifest(command: str, parameters: dict, derived: dict,
                   outputs: list[str]) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "parameters": parameters,
        "derived": derived,
        "outputs": outputs,
        "config_digest": config_digest(command, parameters),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def write_manifest(path, manifest: dict):
    write_json(path, manifest)


def load_manifest(path) -> dict:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed manifest {path}: {exc}") from None
    for field in ("command", "parameters"):
        if field not in manifest:
            raise ConfigError(f"manifest {path} missing field {field!r}")
    return manifest

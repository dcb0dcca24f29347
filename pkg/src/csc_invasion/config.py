"""Line-oriented experiment configuration: ``key = value`` under ``[section]``.

The parser is strict: unknown sections or keys are rejected with the line
number, values are typed per the schema, and a parsed configuration
re-serializes to a canonical normalized form (parse of the serialization
equals the original parse).  ``#`` and ``;`` start comments.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["ExperimentConfig", "parse_config", "serialize_config", "load_config", "SCHEMA"]

_CHOICE = tuple
_LIST_OF_FLOATS = object()

SCHEMA: dict[str, dict[str, object]] = {
    "model": {"alpha": float, "eps": float},
    "grid": {
        "length": float,
        "n_points": int,
        "bc_right": ("neumann", "dirichlet0"),
    },
    "run": {
        "scenario": ("primary_tc", "secondary_csc", "primary_csc", "mass_experiment"),
        "x0": float,
        "t_end": float,
        "scheme": ("imex_cn", "explicit_rk4"),
        "safety": float,
        "cadence": float,
        "snapshot_times": _LIST_OF_FLOATS,
    },
    "analysis": {
        "component": ("u", "v", "sum"),
        "level": float,
        "fit_t_min": float,
        "fit_t_max": float,
        "fit_model": ("with_log", "linear_only"),
        "alpha_sweep": _LIST_OF_FLOATS,
        "k_max": float,
        "n_k": int,
        "kind": ("reduced_kpp", "secondary_csc", "primary_csc"),
        "xi_min": float,
        "xi_max": float,
        "dxi": float,
        "spectral_dx": float,
        "spectral_xi_min": float,
        "spectral_xi_max": float,
        "eta_sweep": _LIST_OF_FLOATS,
    },
    "output": {"directory": str},
}


@dataclass
class ExperimentConfig:
    """Typed, normalized configuration values keyed by section."""

    sections: dict[str, dict[str, object]] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str):
        value = self.get(section, key)
        if value is None:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        return value

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.sections == other.sections


def _parse_value(raw: str, spec, line_no: int, key: str):
    raw = raw.strip()
    try:
        if spec is float:
            return float(raw)
        if spec is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if spec is str:
            return raw
        if spec is _LIST_OF_FLOATS:
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if isinstance(spec, _CHOICE):
            if raw not in spec:
                raise ConfigError(
                    f"invalid value '{raw}' for '{key}' (choices: {', '.join(spec)})",
                    line_no,
                )
            return raw
    except ConfigError:
        raise
    except ValueError:
        pass
    raise ConfigError(f"cannot parse value '{raw}' for key '{key}'", line_no)


def parse_config(text: str) -> ExperimentConfig:
    sections: dict[str, dict[str, object]] = {}
    current: str | None = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", line_no)
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]", line_no)
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line_no)
        if current is None:
            raise ConfigError("key outside of any [section]", line_no)
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[current]:
            raise ConfigError(f"unknown key '{key}' in section [{current}]", line_no)
        if key in sections[current]:
            raise ConfigError(f"duplicate key '{key}' in section [{current}]", line_no)
        sections[current][key] = _parse_value(raw_value, SCHEMA[current][key], line_no, key)
    return ExperimentConfig(sections=sections)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical form: schema section/key order, repr-formatted numbers."""
    lines: list[str] = []
    for section, keys in SCHEMA.items():
        present = config.sections.get(section)
        if not present:
            continue
        lines.append(f"[{section}]")
        for key in keys:
            if key in present:
                lines.append(f"{key} = {_format_value(present[key])}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)

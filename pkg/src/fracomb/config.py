"""Flat ``key = value`` run configuration with strict schema checking."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("identities", "equivalence", "greens_compare", "convergence")


class ConfigError(ValueError):
    """Malformed configuration; the message names the line or field."""


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default, positive-required, allowed values)
SCHEMA = {
    "experiment": (str, "identities", False, EXPERIMENTS),
    "nx": (int, 256, True, None),
    "ny": (int, 512, True, None),
    "dx": (float, 20.0 / 256, True, None),
    "dy": (float, 40.0 / 512, True, None),
    "dt": (float, 1e-3, True, None),
    "n_steps": (int, 1000, True, None),
    "save_stride": (int, 100, True, None),
    "hbar": (float, 1.0, True, None),
    "hamiltonian": (str, "free", False, ("free", "harmonic", "tabulated")),
    "boundary": (str, "periodic", False, ("periodic", "dirichlet")),
    "omega": (float, 1.0, True, None),
    "potential_csv": (str, "", False, None),
    "alpha": (float, 0.5, True, None),
    "sigma_x": (float, 1.0, True, None),
    "initial_amplitude": (float, 1.0, False, None),
    "source_width": (float, 0.1, True, None),  # in units of dy
    "absorber_strength": (float, 500.0, True, None),
    "absorber_fraction": (float, 0.25, True, None),
    "refine": (_bool, True, False, None),
    "modes": (_floats, (0.0, 0.7853981633974483), False, None),
    "contour_tol": (float, 1e-8, True, None),
    "contour_samples": (int, 64, True, None),
    "sign_convention": (str, "auto", False, ("auto", "derived", "paper")),
    "ftse_sign": (str, "auto", False, ("auto", "minus_i", "plus_i")),
    "lambdas": (_floats, (0.0, 1.0, 4.0), False, None),
    "ys": (_floats, (0.0, 0.5, 2.0), False, None),
    "ts": (_floats, (0.5, 1.0, 2.0), False, None),
    "dx_abs": (float, 1.0, False, None),
    "sp_times": (_floats, (10.0, 100.0, 1000.0), False, None),
    "direct_check": (_bool, True, False, None),
    "out": (str, "runs", False, None),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    from_file: frozenset = frozenset()  # keys set in the file itself

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def to_json(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.values.items())}

    def digest(self) -> str:
        """Hash of the numeric configuration (the output directory is excluded)."""
        d = {k: v for k, v in self.to_json().items() if k != "out"}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


def _parse_value(key, text, where):
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    parser, _, positive, allowed = SCHEMA[key]
    try:
        val = parser(text.strip())
    except ValueError as e:
        raise ConfigError(f"{where}: bad value for {key!r}: {e}") from None
    if allowed is not None and val not in allowed:
        raise ConfigError(f"{where}: {key} must be one of {allowed}, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{where}: {key} must be positive, got {val!r}")
    if key in ("dx_abs", "initial_amplitude") and val < 0:
        raise ConfigError(f"{where}: {key} must be non-negative")
    if key in ("ts", "sp_times") and any(v <= 0 for v in val):
        raise ConfigError(f"{where}: {key} entries must be positive")
    return val


def parse_config(text: str, source: str = "<config>", overrides=()) -> RunConfig:
    vals = {k: spec[1] for k, spec in SCHEMA.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        seen.add(key)
        vals[key] = _parse_value(key, val, where)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--override {item!r}: expected key=value")
        key, val = (p.strip() for p in item.split("=", 1))
        vals[key] = _parse_value(key, val, f"--override {key}")
    if vals["hamiltonian"] == "tabulated" and not vals["potential_csv"]:
        raise ConfigError("hamiltonian = tabulated needs potential_csv")
    if vals["alpha"] > 1:
        raise ConfigError("alpha must lie in (0, 1]")
    return RunConfig(vals, frozenset(seen))


def load_config(path, overrides=()) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, str(p), overrides)


def schema_text() -> str:
    """Human-readable schema (key, type, default)."""
    rows = []
    for k, (parser, default, positive, allowed) in SCHEMA.items():
        kind = {str: "string", int: "integer", float: "real", _bool: "bool", _floats: "real list"}[parser]
        extra = f" one of {', '.join(allowed)}" if allowed else (" > 0" if positive else "")
        dflt = ", ".join(map(str, default)) if isinstance(default, tuple) else default
        rows.append(f"{k:18s} {kind}{extra}  (default {dflt})")
    return "\n".join(rows)

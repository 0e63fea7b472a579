"""Declarative run configuration: flat key-value text, strict parsing.

The format is intentionally minimal so configs hash byte-stably: one
``key: value`` pair per line, ``#`` comments, optional ``[section]`` markers
that only group lines visually.  Unknown keys are rejected.
"""

import hashlib
import warnings
from dataclasses import dataclass, field, fields

from .presets import SCENARIOS

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "config_hash"]


class ConfigError(ValueError):
    """Malformed configuration text."""


_DEFAULTS = dict(corrections=5, n_points=150, passes=2, seed=0,
                 ic_strategy="leading_order", repetitions=800)
_KEYS = {"scenario", "epsilon", "method", "corrections", "passes",
         "ic_strategy", "n_points", "seed", "model", "task", "repetitions",
         "mae_tolerance"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    method: str
    corrections: int = 5
    passes: int = 2
    ic_strategy: str = "leading_order"
    n_points: int = 150
    seed: int = 0
    epsilon: float = None            # None: the scenario default
    model: str = None                # checkpoint path override
    task: str = None                 # timing task for bench runs
    repetitions: int = 800
    mae_tolerance: float = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from "
                              f"{sorted(SCENARIOS)}")
        if self.corrections < 0:
            raise ConfigError(f"corrections must be >= 0, got {self.corrections}")
        if self.passes < 1:
            raise ConfigError(f"passes must be >= 1, got {self.passes}")
        if self.n_points < 50:
            raise ConfigError(f"n_points must be >= 50, got {self.n_points}")
        if self.ic_strategy not in ("leading_order", "uniform"):
            raise ConfigError(f"unknown ic_strategy {self.ic_strategy!r}")
        if self.method not in ("standard", "lindstedt_poincare"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.epsilon is not None and abs(self.epsilon) > 1.0:
            warnings.warn(f"|epsilon| = {abs(self.epsilon)} > 1: the expansion "
                          "is asymptotic and may diverge", stacklevel=2)

    def canonical_text(self):
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            parts.append(f"{f.name}: {v}")
        return "\n".join(parts) + "\n"

    @property
    def hash(self):
        return config_hash(self.canonical_text())


def config_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()[:12]


_INT_KEYS = {"corrections", "passes", "n_points", "seed", "repetitions"}
_FLOAT_KEYS = {"epsilon", "mae_tolerance"}


def parse_config(text):
    """Parse configuration text into an ExperimentConfig with defaults."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped or (stripped.startswith("[") and stripped.endswith("]")):
            continue
        if ":" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, value = (s.strip() for s in stripped.split(":", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)

    if "scenario" not in raw:
        raise ConfigError("missing required key 'scenario'")
    values = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc

    scenario = values["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from "
                          f"{sorted(SCENARIOS)}")
    defaults = dict(_DEFAULTS)
    defaults["method"] = SCENARIOS[scenario]["method"]
    if SCENARIOS[scenario]["mae_tol"] is not None:
        defaults["mae_tolerance"] = SCENARIOS[scenario]["mae_tol"]
    merged = {**defaults, **values}
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

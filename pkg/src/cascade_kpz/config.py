"""Experiment configuration and its ``key = value`` text form."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .cascade import REFINEMENTS, parse_tail_rule
from .dimension import DEFAULT_N_MAX, DEFAULT_S_GRID
from .errors import CascadeError, ConfigError
from .sets import parse_set
from .weights import parse_weight

COMMANDS = ("validate", "mass-stats", "dimension", "energy", "kpz", "bound-check")
MEASURES = ("cascade", "lebesgue")
DEFAULT_DEPTH = {"mass-stats": 12, "bound-check": 6}

#: Fields left out of provenance: they never change results.
RUNTIME_FIELDS = ("threads", "out")


def parse_s_grid(text: str) -> tuple:
    """``0.25,0.5`` or ``start:stop:step`` (inclusive of ``stop``)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(round((stop - start) / step)) + 1
            return tuple(round(start + i * step, 10) for i in range(count))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad s grid {text!r}: {exc}", field="s_grid") from exc


def _optional_int(text: str):
    return None if text.strip() in ("", "none", "None") else int(text)


_CONVERTERS = {
    "command": str,
    "d": int,
    "weight": str,
    "set": str,
    "measure": str,
    "refinement": str,
    "n_min": int,
    "n_max": int,
    "s_grid": parse_s_grid,
    "seeds": int,
    "master_seed": int,
    "tail": str,
    "threads": _optional_int,
    "out": str,
    "tolerance": float,
    "depth": int,
    "points": int,
}


@dataclass
class ExperimentConfig:
    command: str
    d: int = 1
    weight: str = "lognormal(sigma2=0.5)"
    set: str = "fullcube"
    measure: str = "cascade"
    refinement: str = "axis"
    n_min: int = 4
    n_max: int | None = None
    s_grid: tuple = DEFAULT_S_GRID
    seeds: int = 20
    master_seed: int = 0
    tail: str = "mean_one"
    threads: int | None = None
    out: str = "out"
    tolerance: float = 0.05
    depth: int | None = None
    points: int = 2000

    def __post_init__(self):
        if self.n_max is None:
            self.n_max = DEFAULT_N_MAX.get(self.d, 8)
        if self.depth is None:
            self.depth = DEFAULT_DEPTH.get(self.command, 12)
        self.s_grid = tuple(float(s) for s in self.s_grid)
        self.check()

    def check(self):
        def bad(field, msg):
            raise ConfigError(msg, field=field)

        if self.command not in COMMANDS:
            bad("command", f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.d < 1:
            bad("d", f"d must be >= 1, got {self.d}")
        if self.measure not in MEASURES:
            bad("measure", f"measure must be one of {MEASURES}")
        if self.refinement not in REFINEMENTS:
            bad("refinement", f"refinement must be one of {REFINEMENTS}")
        if self.n_min < 1 or self.n_max - self.n_min < 2:
            bad("n_max", f"depth range {self.n_min}..{self.n_max} needs at least 3 depths >= 1")
        if not self.s_grid:
            bad("s_grid", "s grid is empty")
        if any(s < 0 for s in self.s_grid) or list(self.s_grid) != sorted(set(self.s_grid)):
            bad("s_grid", "s grid must be strictly increasing and non-negative")
        if self.command != "energy" and self.s_grid[-1] > 1:
            bad("s_grid", "s values must lie in [0, 1]")
        if self.seeds < 1:
            bad("seeds", "at least one seed is required")
        if not 0 <= self.master_seed < 1 << 64:
            bad("master_seed", "master seed must lie in [0, 2^64)")
        if self.threads is not None and self.threads < 1:
            bad("threads", "thread budget must be >= 1")
        if not self.tolerance > 0:
            bad("tolerance", "tolerance must be positive")
        if self.depth < 1:
            bad("depth", "depth must be >= 1")
        if self.points < 2:
            bad("points", "at least two points are required")
        try:
            parse_tail_rule(self.tail)
        except CascadeError as exc:
            bad("tail", str(exc))
        self.model()
        self.target()

    # -- derived objects ------------------------------------------------------

    def model(self):
        return parse_weight(self.weight, self.d, "weight")

    def target(self):
        return parse_set(self.set, self.d, "set")

    @property
    def tail_extra(self) -> int:
        return parse_tail_rule(self.tail)

    # -- text form ------------------------------------------------------------

    def to_dict(self, runtime: bool = True) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if not runtime and f.name in RUNTIME_FIELDS:
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def to_text(self, runtime: bool = True) -> str:
        lines = []
        for key, value in self.to_dict(runtime).items():
            if key == "s_grid":
                value = ",".join(repr(s) for s in value)
            elif value is None:
                value = "none"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **overrides) -> ExperimentConfig:
        values = parse_text(text)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return from_values(values)

    def replace(self, **changes) -> ExperimentConfig:
        return from_values(dict(self.to_dict(), **changes))


def parse_text(text: str) -> dict:
    """``key = value`` lines into typed values; ``#`` starts a comment line."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw!r}", line=lineno)
        if key not in _CONVERTERS:
            raise ConfigError("unknown key", field=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", field=key, line=lineno)
        try:
            values[key] = _CONVERTERS[key](value.strip())
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lineno) from exc
        except ValueError as exc:
            raise ConfigError(f"bad value {value.strip()!r}", field=key, line=lineno) from exc
    return values


def from_values(values: dict) -> ExperimentConfig:
    if "command" not in values:
        raise ConfigError("missing", field="command")
    if "s_grid" in values:
        values["s_grid"] = tuple(values["s_grid"])
    return ExperimentConfig(**values)

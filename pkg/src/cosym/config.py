"""Run configuration: a small key = value format with optional [sections].

Grammar (one item per line)::

    # comment                      ignored, as are blank lines
    [run] | [tolerances]           section header; keys before any header belong to [run]
    key = value                    value is a number, a bare word, or a [list]

Keys in ``[run]``:

    scenario        registered name (e.g. cn(3,1)) or path to a scenario file
    checks          [classify, moment, ...] or "all" (default)
    seed            integer, default 0
    grid            [n1, n2, ...] per-axis sample counts
    clip_box        [[lo, hi], ...] one pair per moment coordinate
    morse_generator [c1, ..., cn] torus generator for the Morse-Bott check
    holonomy_n_max  integer cap for the holonomy iteration, default 10000
    expect_holonomy descriptor the holonomy check must reproduce, e.g. CyclicFinite(2)

Keys in ``[tolerances]``: tol_rank, tol_closed, tol_action, tol_crit, tol_eig,
holonomy_tol.  Tolerance keys are also accepted in ``[run]``.

A scenario file uses the same format with keys ``base`` (a registered name)
and optionally ``name``, ``grid`` and ``clip_box``; it cannot define new fields.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .constructions import build_scenario
from .errors import ParseError, UnknownCheck, UnknownScenario
from .scenario import Scenario

CHECKS = ("closed", "classify", "action", "moment", "clean", "body", "morse", "reduce",
          "quasi_iso", "basic", "orbit", "arrow", "holonomy")

DEFAULT_TOLERANCES = {
    "tol_rank": 1e-9,
    "tol_closed": 1e-4,
    "tol_action": 1e-6,
    "tol_crit": 1e-4,
    "tol_eig": 1e-6,
    "holonomy_tol": 1e-8,
}

RUN_KEYS = {"scenario", "checks", "seed", "grid", "clip_box", "morse_generator", "holonomy_n_max",
            "expect_holonomy"}
SCENARIO_FILE_KEYS = {"base", "name", "grid", "clip_box"}

_SECTION = re.compile(r"\[\s*([A-Za-z_]+)\s*\]")
_ITEM = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)")


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    grid_override: tuple | None = None
    clip_box: tuple | None = None
    checks: tuple = CHECKS
    explicit_checks: bool = False
    seed: int = 0
    morse_generator: tuple | None = None
    holonomy_n_max: int = 10_000
    expect_holonomy: str | None = None
    base_dir: str = "."

    def with_overrides(self, seed=None, tolerances=None) -> "RunConfig":
        tols = dict(self.tolerances)
        for k, v in (tolerances or {}).items():
            tols[k] = _tolerance(k, v, 0)
        return replace(self, seed=self.seed if seed is None else int(seed), tolerances=tols)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "tolerances": dict(self.tolerances),
            "grid_override": list(self.grid_override) if self.grid_override else None,
            "clip_box": [list(p) for p in self.clip_box] if self.clip_box else None,
            "checks": list(self.checks),
            "seed": self.seed,
            "morse_generator": list(self.morse_generator) if self.morse_generator else None,
            "holonomy_n_max": self.holonomy_n_max,
            "expect_holonomy": self.expect_holonomy,
        }


def _items(text: str, allowed_sections: set[str]):
    section = "run"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.fullmatch(line)
        if m:
            section = m.group(1).lower()
            if section not in allowed_sections:
                raise ParseError(lineno, f"unknown section [{section}]")
            continue
        m = _ITEM.fullmatch(line)
        if not m:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1), m.group(2).strip()
        if not value:
            raise ParseError(lineno, f"empty value for {key!r}")
        yield lineno, section, key, value


def _number_list(value: str, lineno: int, key: str):
    try:
        out = json.loads(value)
    except json.JSONDecodeError as exc:
        raise ParseError(lineno, f"{key}: not a list of numbers ({exc.msg})") from None
    return out


def _word_list(value: str) -> list[str]:
    value = value.strip()
    if value.startswith("[") and value.endswith("]"):
        value = value[1:-1]
    return [w.strip().strip("'\"") for w in value.split(",") if w.strip()]


def _tolerance(key: str, value, lineno: int) -> float:
    if key not in DEFAULT_TOLERANCES:
        raise ParseError(lineno, f"unknown tolerance {key!r}")
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParseError(lineno, f"{key}: not a number: {value!r}") from None
    if not v > 0 or v != v or v == float("inf"):
        raise ParseError(lineno, f"{key} must be a positive finite number, got {value}")
    return v


def _grid(value: str, lineno: int) -> tuple:
    counts = _number_list(value, lineno, "grid")
    if not isinstance(counts, list) or not all(isinstance(c, int) and c >= 3 for c in counts):
        raise ParseError(lineno, "grid must be a list of integers >= 3")
    return tuple(counts)


def _box(value: str, lineno: int) -> tuple:
    box = _number_list(value, lineno, "clip_box")
    ok = isinstance(box, list) and box and all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) for c in p) and p[0] < p[1]
        for p in box)
    if not ok:
        raise ParseError(lineno, "clip_box must be [[lo, hi], ...] with lo < hi")
    return tuple((float(lo), float(hi)) for lo, hi in box)


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse a run configuration; absent keys take their documented defaults."""
    fields: dict = {}
    tols = dict(DEFAULT_TOLERANCES)
    for lineno, section, key, value in _items(text, {"run", "tolerances"}):
        if key in DEFAULT_TOLERANCES:
            tols[key] = _tolerance(key, value, lineno)
            continue
        if section == "tolerances" or key not in RUN_KEYS:
            raise ParseError(lineno, f"unknown key {key!r} in [{section}]")
        if key == "scenario":
            fields["scenario"] = value.strip("'\"")
        elif key == "checks":
            words = _word_list(value)
            if words == ["all"]:
                continue
            bad = [w for w in words if w not in CHECKS]
            if bad:
                raise UnknownCheck(f"unknown check(s): {', '.join(bad)}")
            fields["checks"] = tuple(c for c in CHECKS if c in words)
            fields["explicit_checks"] = True
        elif key == "seed":
            try:
                fields["seed"] = int(value)
            except ValueError:
                raise ParseError(lineno, f"seed must be an integer, got {value!r}") from None
        elif key == "grid":
            fields["grid_override"] = _grid(value, lineno)
        elif key == "clip_box":
            fields["clip_box"] = _box(value, lineno)
        elif key == "morse_generator":
            gen = _number_list(value, lineno, key)
            if not isinstance(gen, list) or not gen or not all(isinstance(c, (int, float)) for c in gen):
                raise ParseError(lineno, "morse_generator must be a list of numbers")
            fields["morse_generator"] = tuple(float(c) for c in gen)
        elif key == "holonomy_n_max":
            try:
                n = int(value)
            except ValueError:
                n = 0
            if n < 1:
                raise ParseError(lineno, "holonomy_n_max must be a positive integer")
            fields["holonomy_n_max"] = n
        elif key == "expect_holonomy":
            fields["expect_holonomy"] = value.strip("'\"")
    if "scenario" not in fields:
        raise ParseError(0, "missing required key 'scenario'")
    cfg = RunConfig(tolerances=tols, base_dir=str(base_dir), **fields)
    load_scenario(cfg)  # reject unknown scenarios at parse time
    return cfg


def read_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def _scenario_file(path: Path) -> Scenario:
    fields = {}
    for lineno, _, key, value in _items(path.read_text(), {"scenario"}):
        if key not in SCENARIO_FILE_KEYS:
            raise ParseError(lineno, f"unknown key {key!r} in scenario file {path.name}")
        if key == "grid":
            fields[key] = _grid(value, lineno)
        elif key == "clip_box":
            fields[key] = _box(value, lineno)
        else:
            fields[key] = value.strip("'\"")
    if "base" not in fields:
        raise ParseError(0, f"scenario file {path.name} needs a 'base' key")
    S = build_scenario(fields["base"])
    if "grid" in fields:
        S = _regrid(S, fields["grid"])
    if "clip_box" in fields:
        S = S.replace(clip_box=fields["clip_box"])
    if "name" in fields:
        S = S.replace(name=fields["name"])
    return S


def _regrid(S: Scenario, counts) -> Scenario:
    if len(counts) != S.dim:
        raise ParseError(0, f"grid has {len(counts)} entries, scenario {S.name!r} has dimension {S.dim}")
    return S.with_grid(counts)


def load_scenario(cfg: RunConfig) -> Scenario:
    """Resolve the configured scenario and apply grid/clip overrides."""
    name = cfg.scenario
    candidate = Path(cfg.base_dir) / name
    if candidate.suffix and candidate.is_file():
        S = _scenario_file(candidate)
    else:
        try:
            S = build_scenario(name)
        except UnknownScenario:
            if candidate.suffix:
                raise UnknownScenario(f"scenario file {str(candidate)!r} not found") from None
            raise
    if cfg.grid_override is not None:
        S = _regrid(S, cfg.grid_override)
    if cfg.clip_box is not None:
        S = S.replace(clip_box=cfg.clip_box)
    return S

"""Experiment plans as flat ``key = value`` text.

A plan file looks like::

    # shared settings
    seeds = 0-19
    world.drift = 0.08
    learning_rate = 0.3

    [ce]
    loss_mode = ce

    [spga]
    loss_mode = gsl
    spsg = on

Keys before the first section are plan-wide: ``output_dir``, ``seeds``,
``world.<field>`` for the synthetic world and any tracker field, which then
becomes the default for every variant. A ``[name]`` section starts a
variant; an empty section inherits every default. The first variant is the
baseline that paired deltas are measured against.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, fields

from .classifier import ARCHITECTURES, SpsgSettings, TrainConfig
from .simworld import TrackerConfig, WorldConfig

__all__ = [
    "ConfigError",
    "Variant",
    "ExperimentPlan",
    "parse_config",
    "serialize",
    "config_hash",
    "parse_seeds",
    "format_seeds",
    "read_assignments",
    "coerce",
    "TrainRun",
    "parse_train_config",
]

DEFAULT_SEEDS = (0,)
_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.+\-]+)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


class ConfigError(ValueError):
    """Parse or validation failure; ``line`` is 1-based, or None if global."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _field_kinds(cls):
    # annotations are strings under postponed evaluation
    return {f.name: str(f.type) for f in fields(cls)}


WORLD_KINDS = _field_kinds(WorldConfig)
TRACKER_KINDS = _field_kinds(TrackerConfig)


def coerce(raw: str, kind: str, line=None):
    """Convert ``raw`` text to ``kind`` ("int", "float", "bool" or "str")."""
    try:
        if kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"expected on/off, got {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            if not raw:
                raise ValueError("empty value")
            return raw
    except ValueError as exc:
        raise ConfigError(f"malformed value: {exc}", line) from None
    raise ConfigError(f"unsupported field type {kind!r}", line)


def render(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_seeds(raw: str, line=None) -> tuple:
    """``"0-3,7"`` -> ``(0, 1, 2, 3, 7)``. Order is kept, duplicates rejected."""
    out = []
    for part in raw.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)(?:\s*-\s*(\d+))?", part)
        if not m:
            raise ConfigError(f"malformed seed list {raw!r}", line)
        lo = int(m.group(1))
        hi = int(m.group(2)) if m.group(2) is not None else lo
        if hi < lo:
            raise ConfigError(f"empty seed range {part!r}", line)
        out.extend(range(lo, hi + 1))
    if len(set(out)) != len(out):
        raise ConfigError("duplicate seeds", line)
    return tuple(out)


def format_seeds(seeds) -> str:
    parts, i = [], 0
    seeds = list(seeds)
    while i < len(seeds):
        j = i
        while j + 1 < len(seeds) and seeds[j + 1] == seeds[j] + 1:
            j += 1
        parts.append(str(seeds[i]) if j == i else f"{seeds[i]}-{seeds[j]}")
        i = j + 1
    return ",".join(parts)


def read_assignments(text: str):
    """Yield ``(line, section, key, value)``; section is None before any header."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            yield lineno, section, None, None
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno)
        yield lineno, section, key, value


@dataclass(frozen=True)
class Variant:
    name: str
    tracker: TrackerConfig
    seeds: tuple

    def __post_init__(self):
        if not self.seeds:
            raise ValueError(f"variant {self.name!r} has no seeds")


@dataclass(frozen=True)
class ExperimentPlan:
    variants: tuple
    world: WorldConfig = WorldConfig()
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.variants:
            raise ValueError("plan needs at least one variant")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ValueError("variant names must be unique")

    @property
    def baseline(self) -> Variant:
        return self.variants[0]

    def variant(self, name: str) -> Variant:
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(name)


def _build(cls, values, lines, what):
    try:
        return cls(**values)
    except (ValueError, TypeError) as exc:
        line = max(lines.values()) if lines else None
        raise ConfigError(f"invalid {what}: {exc}", line) from None


def parse_config(text: str) -> ExperimentPlan:
    """Validated plan from ``text``; every error names its line."""
    world, defaults, output_dir, seeds = {}, {}, None, DEFAULT_SEEDS
    world_lines, default_lines = {}, {}
    sections = []  # (name, header line, {key: value}, {key: line}, seeds)
    seen_global = set()

    for lineno, section, key, value in read_assignments(text):
        if key is None:
            if any(s[0] == section for s in sections):
                raise ConfigError(f"duplicate variant {section!r}", lineno)
            sections.append((section, lineno, {}, {}, None))
            continue
        if section is None:
            if key in seen_global:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            seen_global.add(key)
            if key == "output_dir":
                output_dir = coerce(value, "str", lineno)
            elif key == "seeds":
                seeds = parse_seeds(value, lineno)
            elif key.startswith("world."):
                name = key[len("world."):]
                if name not in WORLD_KINDS:
                    raise ConfigError(f"unknown key {key!r}", lineno)
                world[name] = coerce(value, WORLD_KINDS[name], lineno)
                world_lines[name] = lineno
            elif key in TRACKER_KINDS:
                defaults[key] = coerce(value, TRACKER_KINDS[key], lineno)
                default_lines[key] = lineno
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
            continue
        name, header, values, lines, vseeds = sections[-1]
        if key in lines or (key == "seeds" and vseeds is not None):
            raise ConfigError(f"duplicate key {key!r} in [{name}]", lineno)
        if key == "seeds":
            sections[-1] = (name, header, values, lines, parse_seeds(value, lineno))
        elif key in TRACKER_KINDS:
            values[key] = coerce(value, TRACKER_KINDS[key], lineno)
            lines[key] = lineno
        else:
            raise ConfigError(f"unknown key {key!r} in [{name}]", lineno)

    if not sections:
        raise ConfigError("plan defines no variants")
    world_cfg = _build(WorldConfig, world, world_lines, "world")
    _build(TrackerConfig, defaults, default_lines, "tracker defaults")
    variants = []
    for name, header, values, lines, vseeds in sections:
        merged = {**defaults, **values}
        tracker = _build(TrackerConfig, merged, lines or {"": header}, f"variant [{name}]")
        variants.append(Variant(name, tracker, vseeds if vseeds is not None else seeds))
    return ExperimentPlan(tuple(variants), world_cfg, output_dir)


def serialize(plan: ExperimentPlan) -> str:
    """Fully resolved text form; ``parse_config`` of it equals ``plan``."""
    out = ["# resolved experiment plan"]
    if plan.output_dir is not None:
        out.append(f"output_dir = {plan.output_dir}")
    for f in fields(WorldConfig):
        out.append(f"world.{f.name} = {render(getattr(plan.world, f.name))}")
    for v in plan.variants:
        out.append("")
        out.append(f"[{v.name}]")
        out.append(f"seeds = {format_seeds(v.seeds)}")
        for f in fields(TrackerConfig):
            out.append(f"{f.name} = {render(getattr(v.tracker, f.name))}")
    return "\n".join(out) + "\n"


def config_hash(world: WorldConfig, tracker: TrackerConfig) -> str:
    """Stable digest of every resolved setting that influences a run."""
    h = hashlib.sha256()
    for prefix, obj in (("world.", world), ("", tracker)):
        for f in fields(obj):
            h.update(f"{prefix}{f.name}={render(getattr(obj, f.name))}\n".encode())
    return h.hexdigest()[:16]


_TRAIN_KEYS = {
    "learning_rate": "float",
    "momentum": "float",
    "iterations": "int",
    "loss_mode": "str",
    "epsilon": "float",
    "weight_mode": "str",
    "seed": "int",
    "batch_pos": "batch",
    "batch_neg": "batch",
    "architecture": "str",
    "hidden": "int",
    "init_scale": "float",
    "spsg": "bool",
    "alpha": "float",
    "m": "int",
    "spsg_policy": "str",
}


@dataclass(frozen=True)
class TrainRun:
    """Settings for a standalone ``train`` call, read from a flat file."""

    train: TrainConfig
    architecture: str = "hidden"
    hidden: int = 32
    init_scale: float = 0.01
    spsg: SpsgSettings | None = None


def parse_train_config(text: str, seed: int | None = None) -> TrainRun:
    """Parse section-less ``key = value`` training settings.

    ``batch_pos``/``batch_neg`` accept ``all`` to train on every row. A
    ``seed`` key wins over the ``seed`` argument.
    """
    values, lines = {}, {}
    for lineno, section, key, value in read_assignments(text):
        if section is not None:
            raise ConfigError("training configs take no sections", lineno)
        if key not in _TRAIN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        kind = _TRAIN_KEYS[key]
        if kind == "batch":
            values[key] = None if value.lower() == "all" else coerce(value, "int", lineno)
        else:
            values[key] = coerce(value, kind, lineno)
        lines[key] = lineno
    if seed is not None:
        values.setdefault("seed", seed)
    model = {k: values.pop(k) for k in ("architecture", "hidden", "init_scale") if k in values}
    aug = {k: values.pop(k) for k in ("alpha", "m", "spsg_policy") if k in values}
    use_spsg = values.pop("spsg", False)
    train_cfg = _build(TrainConfig, values, lines, "training config")
    if "spsg_policy" in aug:
        aug["policy"] = aug.pop("spsg_policy")
    spsg = _build(SpsgSettings, aug, lines, "spsg settings") if use_spsg else None
    run = TrainRun(train_cfg, spsg=spsg, **model)
    if run.architecture not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture {run.architecture!r}", lines.get("architecture"))
    return run

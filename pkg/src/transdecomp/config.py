"""Run configuration: INI sections with defaults reproducing the worked
barrier example, ``section.key=value`` overrides and a lossless dump."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        # "section.key" the message is about, if any, for locating it in the source
        self.key = key


@dataclass(frozen=True)
class PotentialConfig:
    a: float = 2.0
    b: float = 3.0
    v0: float = 5.0
    mass: float = 1.0


@dataclass(frozen=True)
class EnergyGridConfig:
    e_max: float = 40.0
    n: int = 2000
    # grid for <M+>(t) only; M is never formed densely there
    mexp_n: int = 2**21


@dataclass(frozen=True)
class XGridConfig:
    x_max: float = 20.0
    n: int = 800


@dataclass(frozen=True)
class TimeConfig:
    t_min: float = -30.0
    t_max: float = 30.0
    n: int = 400
    times: tuple[float, ...] = ()
    # decompose snapshots, in units of 1/Gamma of the selected pole
    snapshots: tuple[float, ...] = (-3.0, -1.0, 0.0, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class PolesConfig:
    e_min: float = 0.1
    e_max: float = 10.0
    n_seeds: int = 200
    tol: float = 1e-12


@dataclass(frozen=True)
class StateConfig:
    pole: int = 3
    mu: complex | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    precision: int = 12


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    energy_grid: EnergyGridConfig = field(default_factory=EnergyGridConfig)
    x_grid: XGridConfig = field(default_factory=XGridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    poles: PolesConfig = field(default_factory=PolesConfig)
    state: StateConfig = field(default_factory=StateConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        p = self.potential
        if not 0 < p.a < p.b:
            raise ConfigError(f"[potential] need 0 < a < b, got a={p.a}, b={p.b}", "potential.a")
        if p.v0 < 0:
            raise ConfigError(f"[potential] need v0 >= 0, got {p.v0}", "potential.v0")
        if p.mass <= 0:
            raise ConfigError(f"[potential] need mass > 0, got {p.mass}", "potential.mass")
        for name, count in [
            ("energy_grid.n", self.energy_grid.n),
            ("energy_grid.mexp_n", self.energy_grid.mexp_n),
            ("x_grid.n", self.x_grid.n),
            ("time.n", self.time.n),
        ]:
            if count < 2:
                raise ConfigError(f"{name} must be >= 2, got {count}", name)
        if self.poles.n_seeds < 8:
            raise ConfigError(f"poles.n_seeds must be >= 8, got {self.poles.n_seeds}", "poles.n_seeds")
        if self.energy_grid.e_max <= 0:
            raise ConfigError("energy_grid.e_max must be positive", "energy_grid.e_max")
        if self.x_grid.x_max <= 0:
            raise ConfigError("x_grid.x_max must be positive", "x_grid.x_max")
        if not self.time.t_min < self.time.t_max:
            raise ConfigError("time.t_min must be below time.t_max", "time.t_min")
        if not 0 < self.poles.e_min < self.poles.e_max:
            raise ConfigError("need 0 < poles.e_min < poles.e_max", "poles.e_min")
        if not 6 <= self.output.precision <= 17:
            raise ConfigError(f"output.precision must lie in [6, 17], got {self.output.precision}", "output.precision")
        if self.state.mu is not None and not self.state.mu.imag < 0:
            raise ConfigError(f"state.mu must have negative imaginary part, got {self.state.mu}", "state.mu")
        if self.state.mu is None and self.state.pole < 1:
            raise ConfigError("state.pole is a 1-based index", "state.pole")
        return self

    def to_ini(self) -> str:
        lines = []
        for sec in fields(self):
            lines.append(f"[{sec.name}]")
            for f in fields(getattr(self, sec.name)):
                lines.append(f"{f.name} = {_format(getattr(getattr(self, sec.name), f.name))}")
            lines.append("")
        return "\n".join(lines)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, complex):
        return repr(value).strip("()")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, kind: str):
    raw = raw.strip()
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "str":
        return raw
    if kind.startswith("tuple"):
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if kind.startswith("complex"):
        return complex(raw.replace(" ", "").replace("i", "j")) if raw else None
    raise AssertionError(kind)


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    where, section = {}, None
    for num, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
        elif section and "=" in s and not s.startswith(("#", ";")):
            where[(section, s.split("=", 1)[0].strip())] = num
    return where


def _apply(cfg: RunConfig, section: str, key: str, raw: str, where: str) -> RunConfig:
    names = {f.name: f for f in fields(cfg)}
    if section not in names:
        raise ConfigError(f"{where}: unknown section [{section}]")
    sub = getattr(cfg, section)
    sub_fields = {f.name: f for f in fields(sub)}
    if key not in sub_fields:
        raise ConfigError(f"{where}: unknown key '{key}' in [{section}]")
    kind = str(sub_fields[key].type).split(" ")[0]
    try:
        value = _parse(raw, kind)
    except ValueError:
        raise ConfigError(f"{where}: [{section}] {key}: cannot read {raw!r} as {kind}") from None
    return replace(cfg, **{section: replace(sub, **{key: value})})


def parse_config(text: str, source: str = "<config>", overrides=()) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_numbers(text)
    origin = {}
    cfg = RunConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((section, key), '?')}"
            cfg = _apply(cfg, section, key, raw, where)
            origin[f"{section}.{key}"] = where
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        lhs, raw = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        cfg = _apply(cfg, section, key, raw, f"--set {item}")
        origin[f"{section}.{key}"] = f"--set {item}"
    try:
        return cfg.validate()
    except ConfigError as exc:
        where = origin.get(exc.key or "")
        if where is None:
            raise
        raise ConfigError(f"{where}: {exc}", exc.key) from None


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path), overrides)

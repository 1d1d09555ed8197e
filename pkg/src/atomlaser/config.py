"""Flat ``key = value`` config files with ``[section]`` headers and ``#`` comments.

Keys mirror dataclass field names exactly (case-sensitive). Example::

    [params]
    preset = li7
    Omega = 0.2

    [grid]
    n = 256
    length = 100

    [solver]
    dt = 0.01
    t_end = 50
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from pathlib import Path

from .cgle import Grid, SolverConfig
from .coupled import CoupledConfig
from .errors import ConfigError
from .params import PhysicalParams, preset
from .sweep import NumericalSettings, SweepSpec

OUTDIR_ENV = "ATOMLASER_OUTDIR"


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    cp.optionxform = str  # keep field-name case
    return cp


def read(path) -> configparser.ConfigParser:
    cp = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cp


def loads(text: str) -> configparser.ConfigParser:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return cp


def _convert(value: str, target):
    if target is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return target(value)


def _section_to(cls, cp: configparser.ConfigParser, section: str, skip=()):
    """Build dataclass ``cls`` from ``section``, using field defaults for absent keys."""
    if not cp.has_section(section):
        return cls()
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in cp.items(section):
        if key in skip:
            continue
        if key not in fields:
            raise ConfigError(f"[{section}] unknown key {key!r}; expected one of {sorted(fields)}")
        default = fields[key].default
        target = type(default) if default is not dataclasses.MISSING else float
        try:
            kwargs[key] = _convert(raw, target)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def physical_params(cp: configparser.ConfigParser) -> tuple[PhysicalParams, str]:
    """``[params]``: optional ``preset`` base, then per-field overrides."""
    if not cp.has_section("params"):
        raise ConfigError("missing [params] section")
    items = dict(cp.items("params"))
    name = items.pop("preset", "")
    base = preset(name).to_dict() if name else {}
    unknown = set(items) - set(PhysicalParams.field_names())
    if unknown:
        raise ConfigError(f"[params] unknown key(s): {sorted(unknown)}")
    try:
        base.update({k: float(v) for k, v in items.items()})
        p = PhysicalParams.from_dict(base)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"[params]: {exc}") from exc
    return p, name


def params_to_text(p: PhysicalParams) -> str:
    lines = ["[params]"] + [f"{k} = {format(v, '.17g')}" for k, v in p.to_dict().items()]
    return "\n".join(lines) + "\n"


def grid(cp) -> Grid:
    return _section_to(Grid, cp, "grid")


def solver(cp) -> SolverConfig:
    return _section_to(SolverConfig, cp, "solver")


def coupled(cp) -> CoupledConfig:
    return _section_to(CoupledConfig, cp, "coupled")


def numerical(cp) -> NumericalSettings:
    return _section_to(NumericalSettings, cp, "numerical")


def get(cp, section: str, key: str, default=None, cast=str):
    if cp.has_option(section, key):
        try:
            return _convert(cp.get(section, key), cast)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return default


def float_list(cp, section: str, key: str) -> list[float]:
    raw = get(cp, section, key, "")
    try:
        return [float(s) for s in raw.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _range(cp, key: str, default) -> tuple[float, float, int]:
    if not cp.has_option("sweep", key):
        return default
    parts = [s.strip() for s in cp.get("sweep", key).split(",")]
    if len(parts) != 3:
        raise ConfigError(f"[sweep] {key} must be 'lo, hi, n'")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"[sweep] {key}: {exc}") from exc


def sweep_spec(cp) -> SweepSpec:
    """``[sweep]`` with omega_range, r_range (absolute, or multiples of base R if r_relative = true).

    Default axes are 100 points for analytic maps and 20 for numerical ones.
    """
    base, name = physical_params(cp)
    mode = get(cp, "sweep", "mode", "analytic")
    n_default = 20 if mode == "numerical" else 100
    omega_range = _range(cp, "omega_range", (0.0, 1.0, n_default))
    r_range = _range(cp, "r_range", (0.5, 2.0, n_default) if get(cp, "sweep", "r_relative", True, bool) else None)
    if r_range is None:
        raise ConfigError("[sweep] r_range required when r_relative = false")
    if get(cp, "sweep", "r_relative", True, bool):
        r_range = (r_range[0] * base.R, r_range[1] * base.R, r_range[2])
    known = {"omega_range", "r_range", "r_relative", "mode", "workers"}
    if cp.has_section("sweep"):
        extra = set(dict(cp.items("sweep"))) - known
        if extra:
            raise ConfigError(f"[sweep] unknown key(s): {sorted(extra)}")
    spec = SweepSpec(
        base=base,
        omega_range=omega_range,
        r_range=r_range,
        mode=mode,
        numerical=numerical(cp),
        preset_name=name,
        workers=get(cp, "sweep", "workers", 1, int),
    )
    spec.validate()
    return spec


def output_dir(cp=None, override=None) -> Path:
    """Explicit override, then ``[output] dir``, then $ATOMLASER_OUTDIR, then the current directory."""
    if override:
        return Path(override)
    if cp is not None and cp.has_option("output", "dir"):
        return Path(cp.get("output", "dir"))
    return Path(os.environ.get(OUTDIR_ENV, "."))

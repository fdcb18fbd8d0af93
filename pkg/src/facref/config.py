"""Aggregate configuration with INI persistence.

Every tunable of the pipeline lives in one :class:`Config` of frozen
sub-specs.  ``read_config`` overlays an INI file onto the shipped defaults;
unknown sections or keys and out-of-range values raise :class:`ConfigError`
naming the offender, so typos never silently fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .bayes import M_STATES, S_STATES, NetworkSpec, default_cpt
from .exceptions import ConfigError
from .features import NeighborhoodSpec
from .occupancy import GridParams
from .shapes import ShapeParams
from .textures import FusionParams
from .uncertainty import UncertaintySpec


@dataclass(frozen=True)
class ReconParams:
    recess: float = 0.0  # distance fitted solids sit behind the facade, m

    def __post_init__(self):
        if self.recess < 0:
            raise ConfigError("recon.recess must be non-negative")


@dataclass(frozen=True)
class SimParams:
    seed: int = 0
    angular_resolution: float = 0.015
    max_range: float = 50.0
    sigma_noise: float = 0.005
    tau: float = 0.85
    epsilon: float = 0.05
    interior_offset: float = 4.0


@dataclass(frozen=True)
class EvalParams:
    iou_threshold: float = 0.5
    k_min: int = 20  # rays through an opening for it to count as measured

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError("eval.iou_threshold must be in (0, 1]")
        if self.k_min < 0:
            raise ConfigError("eval.k_min must be non-negative")


@dataclass(frozen=True)
class Config:
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    grid: GridParams = field(default_factory=GridParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    features: NeighborhoodSpec = field(default_factory=NeighborhoodSpec)
    bn: NetworkSpec = field(default_factory=NetworkSpec)
    shape: ShapeParams = field(default_factory=ShapeParams)
    recon: ReconParams = field(default_factory=ReconParams)
    sim: SimParams = field(default_factory=SimParams)
    eval: EvalParams = field(default_factory=EvalParams)


_SECTIONS = {
    "uncertainty": (UncertaintySpec, "uncertainty"),
    "grid": (GridParams, "grid"),
    "fusion": (FusionParams, "fusion"),
    "features": (NeighborhoodSpec, "features"),
    "bn": (NetworkSpec, "bn"),
    "shape": (ShapeParams, "shape"),
    "recon": (ReconParams, "recon"),
    "sim": (SimParams, "sim"),
    "eval": (EvalParams, "eval"),
}


def _convert(raw: str, kind, where: str):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def read_config(path=None) -> Config:
    """Defaults overlaid with an optional INI file."""
    if path is None:
        return Config()
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    kwargs = {}
    cpt = default_cpt()
    for section in parser.sections():
        if section == "bn.cpt":
            for key, raw in parser.items(section):
                try:
                    m, s = key.split(".")
                except ValueError:
                    raise ConfigError(f"bn.cpt key {key!r} must be <m>.<s>")
                if m not in M_STATES or s not in S_STATES:
                    raise ConfigError(f"bn.cpt key {key!r} names unknown states")
                cpt[(m, s)] = _convert(raw, float, f"bn.cpt.{key}")
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        cls, attr = _SECTIONS[section]
        types = {f.name: f.type for f in fields(cls)}
        py_types = {"float": float, "int": int, "bool": bool, "str": str}
        sect_kwargs = {}
        for key, raw in parser.items(section):
            if key not in types or key == "cpt":
                raise ConfigError(f"unknown config key {section}.{key}")
            kind = types[key]
            kind = py_types.get(kind, kind) if isinstance(kind, str) else kind
            sect_kwargs[key] = _convert(raw, kind, f"{section}.{key}")
        kwargs[attr] = (cls, sect_kwargs)

    built = {}
    for attr, (cls, sect_kwargs) in kwargs.items():
        if cls is NetworkSpec:
            sect_kwargs["cpt"] = cpt
        built[attr] = cls(**sect_kwargs)
    if "bn" not in built and cpt != default_cpt():
        built["bn"] = NetworkSpec(cpt=cpt)
    return Config(**built)


def write_config(config: Config, path):
    """INI dump that :func:`read_config` reproduces exactly."""
    parser = configparser.ConfigParser()
    for section, (cls, attr) in _SECTIONS.items():
        sub = getattr(config, attr)
        parser[section] = {}
        for f in fields(cls):
            if f.name == "cpt":
                continue
            parser[section][f.name] = repr(getattr(sub, f.name))
    parser["bn.cpt"] = {f"{m}.{s}": repr(p)
                        for (m, s), p in sorted(config.bn.cpt.items())}
    with open(path, "w", encoding="utf-8") as f:
        parser.write(f)

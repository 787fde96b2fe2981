"""Run configuration for the CLI: INI-style sections with flag overrides.

The file format is flat sectioned ``key = value`` text::

    [schedule]
    family = all            # or one family name
    sigma_d = 0.5
    t0 =                    # blank means the family default
    tf =
    clamp_eps = 1e-6
    alpha_fn = cosine

    [grid]
    n_points = 101
    t_ref =                 # blank means the domain start

    [mc]
    n = 1000000
    seed = 0
    distribution = standard_normal   # or gaussian_mixture

    [output]
    path = out
    format = csv

Unknown sections or keys are rejected.  Every key can be overridden on the
command line by a flag of the same dotted name (``--schedule.family ...``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .empirical import DataDistribution, standard_normal, two_mode_mixture
from .errors import ConfigError
from .schedules import TABLE_FAMILIES, Family, Schedule, make_schedule

_FAMILY_CHOICES = ("all",) + tuple(f.value for f in Family)
_DISTRIBUTION_CHOICES = ("standard_normal", "gaussian_mixture")


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_optional_float(text: str) -> float | None:
    return None if text == "" else _parse_float(text)


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_str(text: str) -> str:
    return text


# section -> key -> (RunConfig field, parser)
_SCHEMA = {
    "schedule": {
        "family": ("family", _parse_str),
        "sigma_d": ("sigma_d", _parse_float),
        "t0": ("t0", _parse_optional_float),
        "tf": ("tf", _parse_optional_float),
        "clamp_eps": ("clamp_eps", _parse_float),
        "alpha_fn": ("alpha_fn", _parse_str),
    },
    "grid": {
        "n_points": ("n_points", _parse_int),
        "t_ref": ("t_ref", _parse_optional_float),
    },
    "mc": {
        "n": ("mc_n", _parse_int),
        "seed": ("seed", _parse_int),
        "distribution": ("distribution", _parse_str),
    },
    "output": {
        "path": ("out_dir", _parse_str),
        "format": ("out_format", _parse_str),
    },
}


@dataclass
class RunConfig:
    """Validated configuration shared by all CLI commands."""

    family: str = "all"
    sigma_d: float = 0.5
    t0: float | None = None
    tf: float | None = None
    clamp_eps: float = 1e-6
    alpha_fn: str = "cosine"
    n_points: int = 101
    t_ref: float | None = None
    mc_n: int = 1_000_000
    seed: int = 0
    distribution: str = "standard_normal"
    out_dir: str = "out"
    out_format: str = "csv"

    def validate(self) -> "RunConfig":
        if self.family not in _FAMILY_CHOICES:
            raise ConfigError(
                f"unknown family {self.family!r}; choices: {', '.join(_FAMILY_CHOICES)}"
            )
        if self.distribution not in _DISTRIBUTION_CHOICES:
            raise ConfigError(
                f"unknown distribution {self.distribution!r}; "
                f"choices: {', '.join(_DISTRIBUTION_CHOICES)}"
            )
        if self.out_format != "csv":
            raise ConfigError(f"unsupported output format {self.out_format!r}")
        if self.n_points < 1:
            raise ConfigError(f"grid n_points must be >= 1, got {self.n_points}")
        if self.mc_n < 1000:
            raise ConfigError(f"mc n must be >= 1000, got {self.mc_n}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.sigma_d <= 0:
            raise ConfigError(f"sigma_d must be positive, got {self.sigma_d}")
        if self.clamp_eps <= 0:
            raise ConfigError(f"clamp_eps must be positive, got {self.clamp_eps}")
        if self.family == "all" and (self.t0 is not None or self.tf is not None):
            raise ConfigError("t0/tf overrides require a single schedule.family")
        return self


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file, or return defaults when ``path`` is None."""
    config = RunConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            attr, parse = _SCHEMA[section][key]
            setattr(config, attr, parse(raw.strip()))
    return config.validate()


def apply_overrides(config: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Apply ``section.key -> raw value`` overrides (command-line flags)."""
    for dotted, raw in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown config key {dotted}")
        attr, parse = _SCHEMA[section][key]
        setattr(config, attr, parse(raw))
    return config.validate()


def schedules_from_config(config: RunConfig) -> list[Schedule]:
    """Instantiate the configured schedule(s): the five families, or one."""
    kwargs = dict(
        sigma_d=config.sigma_d,
        clamp_eps=config.clamp_eps,
        alpha_fn=config.alpha_fn,
    )
    try:
        if config.family == "all":
            return [make_schedule(f, **kwargs) for f in TABLE_FAMILIES]
        return [make_schedule(config.family, t0=config.t0, tf=config.tf, **kwargs)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def distribution_from_config(config: RunConfig, dim: int) -> DataDistribution:
    if config.distribution == "standard_normal":
        return standard_normal(dim=dim)
    return two_mode_mixture(dim=dim)

"""Experiment configuration.

A config file is a flat YAML mapping. Every key is optional and defaults to
the value in :class:`ExperimentConfig`; unknown keys are rejected.

Keys
----
degrees : list of int
    Section degrees n, strictly ascending.
samples : int
    Sections drawn per degree.
measure : "uniform" | "perturbed"
potential : str
    Potential label for the perturbed measure, e.g. ``softmax:0.1``.
epsilon : float
    Scale of the perturbing potential: u = epsilon * potential.
burn_in, thin : int
    Metropolis steps before the recorded state and between recorded states.
sigma : float or "auto"
    Proposal scale; "auto" tunes it to about 0.4 acceptance per degree.
mass_samples : int
    Draws for the total-mass checks of the perturbed density.
battery : list of str
    Test-function labels; see ``equizero.zeros.BATTERY_FUNCS``.
seed : int
    Master seed (unsigned 64-bit).
out : str
    Output directory.
workers : int
alpha0, c0, beta0, c5 : float
    Moderateness constants.
A : float or null
    Exceptional threshold constant; null means auto-calibrated.
moderate_ks, moderate_samples, moderate_rho, moderate_tau :
    Moderate suite: dimensions, draws, Hoelder exponent and softmax scale.
covering_k_min, covering_k_max : int
holder_rho, holder_pairs, holder_dims :
    Hoelder suite exponent, sampled pairs and dimensions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import yaml

from ..measures import Constants
from ..sections import MAX_DEGREE
from ..zeros import BATTERY_FUNCS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    degrees: tuple[int, ...] = (8, 16, 32, 64, 128)
    samples: int = 200
    measure: str = "uniform"
    potential: str = "softmax:0.1"
    epsilon: float = 0.0
    burn_in: int = 1000
    thin: int = 10
    sigma: Union[float, str] = "auto"
    mass_samples: int = 100_000
    battery: tuple[str, ...] = tuple(BATTERY_FUNCS)
    seed: int = 0
    out: str = "results"
    workers: int = 1
    alpha0: float = 0.5
    c0: float = 4.0
    beta0: float = 1.0
    c5: float = 4.0
    A: Optional[float] = None
    moderate_ks: tuple[int, ...] = (1, 2, 3)
    moderate_samples: int = 100_000
    moderate_rho: float = 0.5
    moderate_tau: float = 0.1
    covering_k_min: int = 7
    covering_k_max: int = 30
    holder_rho: float = 0.99
    holder_pairs: int = 1_000_000
    holder_dims: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        for name in ("degrees", "battery", "moderate_ks", "holder_dims"):
            value = getattr(self, name)
            if isinstance(value, (str, int)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        d = self.degrees
        if not d:
            raise ConfigError("degrees must be non-empty")
        if any(not isinstance(n, int) or not 1 <= n <= MAX_DEGREE for n in d):
            raise ConfigError(f"degrees must be integers in [1, {MAX_DEGREE}]")
        if any(a >= b for a, b in zip(d, d[1:])):
            raise ConfigError("degrees must be strictly ascending")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.measure not in ("uniform", "perturbed"):
            raise ConfigError(f"unknown measure {self.measure!r}")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be >= 0")
        if self.burn_in < 1 or self.thin < 1:
            raise ConfigError("burn_in and thin must be >= 1")
        if self.sigma != "auto" and not (isinstance(self.sigma, (int, float)) and self.sigma > 0):
            raise ConfigError("sigma must be a positive number or 'auto'")
        unknown = [b for b in self.battery if b not in BATTERY_FUNCS]
        if unknown or not self.battery:
            raise ConfigError(f"unknown battery functions {unknown}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.A is not None and not self.A > 0:
            raise ConfigError("A must be positive")
        if self.covering_k_min < 1 or self.covering_k_max < self.covering_k_min:
            raise ConfigError("bad covering k range")
        if not 0 < self.holder_rho <= 1 or not 0 < self.moderate_rho < 1:
            raise ConfigError("rho must lie in (0, 1)")
        try:
            self.constants
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def constants(self) -> Constants:
        return Constants(alpha0=self.alpha0, c0=self.c0, beta0=self.beta0, c5=self.c5)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


FIELDS = frozenset(f.name for f in dataclasses.fields(ExperimentConfig))


def config_from_mapping(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    unknown = sorted(set(data) - FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(map(str, unknown))}")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return config_from_mapping({} if data is None else data)

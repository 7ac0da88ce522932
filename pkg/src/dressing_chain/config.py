"""Flat ``key = value`` run configuration.

Example::

    mu = 0, 1, 2
    initial_sigma = 0.3, -0.1, 0.5
    x_end = 0.8
    step = 1e-3

Lines starting with ``#`` are comments. Vectors are comma separated.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .integrator import BLOWUP_THRESHOLD, POLE_MASK_HALFWIDTH


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


@dataclass(frozen=True)
class RunConfig:
    mu: tuple[float, ...] = (0.0, 1.0, 2.0)
    initial_sigma: tuple[float, ...] = (0.3, -0.1, 0.5)
    x_end: float = 0.8
    step: float = 1e-3
    output_format: str = "csv"
    pole_mask_halfwidth: float = POLE_MASK_HALFWIDTH
    blowup_threshold: float = BLOWUP_THRESHOLD
    tolerance: float = 1e-6
    beta: tuple[float, ...] | None = None
    alpha: complex | None = None
    lame_x_start: float = 0.25
    # test hook: added to the fitted phase shift
    x0_perturbation: complex = 0j

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("step must be positive")
        if self.x_end <= 0:
            raise ConfigError("x_end must be positive")
        for name in ("pole_mask_halfwidth", "blowup_threshold", "tolerance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if len(self.mu) != len(self.initial_sigma):
            raise ConfigError("mu and initial_sigma must have the same length")
        if self.beta is not None and len(self.beta) != len(self.mu):
            raise ConfigError("beta must have the same length as mu")

    @property
    def n(self) -> int:
        return len(self.mu)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_PARSERS = {
    "mu": _floats,
    "initial_sigma": _floats,
    "beta": _floats,
    "x_end": float,
    "step": float,
    "output_format": str.strip,
    "pole_mask_halfwidth": float,
    "blowup_threshold": float,
    "tolerance": float,
    "alpha": _complex,
    "lame_x_start": float,
    "x0_perturbation": _complex,
}


def parse_items(items: dict[str, str]) -> dict:
    out = {}
    for key, raw in items.items():
        key = key.strip().lower().replace("-", "_")
        if key == "n":
            continue  # implied by the length of mu; accepted for readability
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    items: dict[str, str] = {}
    if path is not None:
        text = Path(path).read_text()
        cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",))
        cp.read_string("[run]\n" + text)
        items.update(cp["run"])
    if overrides:
        items.update(overrides)
    values = parse_items(items)
    n_declared = items.get("n")
    cfg = RunConfig(**values)
    if n_declared is not None and int(n_declared) != cfg.n:
        raise ConfigError(f"n = {n_declared} disagrees with len(mu) = {cfg.n}")
    return cfg

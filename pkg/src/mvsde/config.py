"""Experiment configuration: flat ``section.key = value`` text files with
command-line overrides.

Precedence: built-in defaults (some per command) < config file < flags.
Exactly one of ``method.level`` / ``method.h`` may be given; dyadic grids
are required wherever the multilevel engine is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from .model import InitialLaw

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_text"]


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 2)."""


# key -> (attribute, converter)
_KEYS = {
    "model.kernel": ("kernel", str),
    "model.sigma": ("sigma", float),
    "model.x0": ("x0", float),
    "model.T": ("horizon", float),
    "model.init": ("init", str),
    "model.init_mean": ("init_mean", float),
    "model.init_std": ("init_std", float),
    "method.N": ("n_particles", int),
    "method.K": ("K", int),
    "method.h": ("h", float),
    "method.level": ("level", int),
    "method.M": ("picard_steps", int),
    "method.eps": ("epsilon", float),
    "method.L0": ("table_level", int),
    "method.k_min": ("k_min", int),
    "method.k_max": ("k_max", int),
    "method.k_list": ("k_list", str),
    "mlmc.picard0": ("picard0", str),
    "mlmc.picard0_mean": ("picard0_mean", float),
    "mlmc.picard0_std": ("picard0_std", float),
    "complexity.eps_list": ("eps_list", str),
    "complexity.replicates": ("replicates", int),
    "complexity.methods": ("methods", str),
    "density.n_ppm": ("n_ppm", int),
    "output.density_grid_lo": ("density_grid_lo", float),
    "output.density_grid_hi": ("density_grid_hi", float),
    "output.density_grid_points": ("density_grid_points", int),
}


@dataclass
class ExperimentConfig:
    kernel: str = "gaussian"
    sigma: float = 0.1
    x0: float = 0.5
    horizon: float = 1.0
    init: str = "point"
    init_mean: Optional[float] = None
    init_std: float = 1.0
    n_particles: int = 500
    K: int = 10
    h: Optional[float] = None
    level: Optional[int] = None
    picard_steps: Optional[int] = None
    epsilon: float = 0.03
    table_level: Optional[int] = None
    k_min: int = 1
    k_max: int = 20
    k_list: Optional[str] = None
    picard0: Optional[str] = None
    picard0_mean: Optional[float] = None
    picard0_std: Optional[float] = None
    eps_list: str = "0.04,0.02,0.01,0.005"
    replicates: int = 5
    methods: str = "chaos,ppm,mlmc"
    n_ppm: int = 10000
    density_grid_lo: float = -8.0
    density_grid_hi: float = 8.0
    density_grid_points: int = 1601

    def validate(self):
        if self.kernel != "gaussian":
            raise ConfigError(
                f"unknown kernel {self.kernel!r}: only 'gaussian' is "
                "configurable here (custom kernels go through the library API)"
            )
        if self.h is not None and self.level is not None:
            raise ConfigError("give exactly one of method.h / method.level")
        if self.init not in ("point", "gaussian"):
            raise ConfigError(f"model.init must be point or gaussian, got {self.init!r}")
        if self.picard0 is not None and self.picard0 not in ("point", "gaussian"):
            raise ConfigError("mlmc.picard0 must be point or gaussian")
        if self.horizon <= 0 or self.sigma < 0:
            raise ConfigError("model.T must be > 0 and model.sigma >= 0")
        return self

    def initial_law(self):
        mean = self.x0 if self.init_mean is None else self.init_mean
        if self.init == "point":
            return InitialLaw("point", mean)
        return InitialLaw("gaussian", mean, self.init_std)

    def picard0_law(self):
        """Law of the zeroth Picard iterate; defaults to the path initial law."""
        if self.picard0 is None:
            return None
        mean = self.x0 if self.picard0_mean is None else self.picard0_mean
        if self.picard0 == "point":
            return InitialLaw("point", mean)
        std = 1.0 if self.picard0_std is None else self.picard0_std
        return InitialLaw("gaussian", mean, std)

    def k_values(self):
        if self.k_list is None:
            return list(range(self.k_min, self.k_max + 1)), False
        try:
            raw = [int(tok) for tok in self.k_list.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad method.k_list {self.k_list!r}") from exc
        seen = []
        for k in raw:
            if k not in seen:
                seen.append(k)
        return seen, len(seen) < len(raw)

    def eps_values(self):
        try:
            values = [float(tok) for tok in self.eps_list.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad complexity.eps_list {self.eps_list!r}") from exc
        if not values:
            raise ConfigError("complexity.eps_list is empty")
        return values

    def method_names(self):
        names = [tok.strip() for tok in self.methods.split(",") if tok.strip()]
        for name in names:
            if name not in ("chaos", "ppm", "mlmc"):
                raise ConfigError(f"unknown method {name!r} in complexity.methods")
        return tuple(names)


def parse_config_text(text):
    """Parse ``section.key = value`` lines ('#' comments, blank lines ok)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def build_config(file_values=None, overrides=None):
    """Assemble an ExperimentConfig from parsed file values and overrides
    (both dicts keyed by config key name)."""
    cfg = ExperimentConfig()
    valid_attrs = {f.name for f in fields(ExperimentConfig)}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if key in _KEYS:
                attr, conv = _KEYS[key]
            elif key in valid_attrs:
                attr, conv = key, None
            else:
                raise ConfigError(f"unknown config key {key!r}")
            if value is None:
                continue
            try:
                setattr(cfg, attr, conv(value) if conv and isinstance(value, str) else value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return cfg.validate()

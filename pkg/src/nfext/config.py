"""Scenario configuration: reference defaults, key=value files, derived objects."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .constants import C, ETA
from .errors import ConfigError
from .geometry import (AntennaLayout, Distributed, Kind, Linear, Planar, TargetSurface,
                       build_layout, surface_at_pose)


@dataclass(frozen=True)
class ScenarioConfig:
    # target
    target: str = "sphere"
    d_y: float = 0.8
    d_z: float = 1.75
    rho: float = 1.24
    cyl_length: float = 1.75
    # antennas
    layout: str = "linear"
    n: int = 13
    n_y: int = 1
    spacing: float = 0.125
    sub_count: int = 3
    sub_spacing: float = 2.0
    # true pose
    range_m: float = 4.0
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    # radio
    fc: float = 77e9
    bandwidth: float = 100e6
    l2i0: float = 1.0
    pattern: str = "isotropic"
    # synthesis
    noise_var: float = 0.0
    seed: int = 0
    oversample: int = 8
    # estimators
    model: str = "extended"
    rmin: float = 3.0
    rmax: float = 5.0
    rstep: float = 0.0  # 0 -> wavelength / 8
    amin_deg: float = -3.0
    amax_deg: float = 3.0
    astep_deg: float = 0.25
    sweep_angle: str = "azimuth"
    # oracle
    samples_per_wavelength: float = 16.0
    node_budget: int = 4_000_000
    grid_n: int = 128
    # output
    output_dir: str = "out"

    def __post_init__(self):
        positive = ("d_y", "d_z", "rho", "cyl_length", "spacing", "range_m", "fc",
                    "bandwidth", "l2i0", "samples_per_wavelength", "node_budget", "grid_n",
                    "n", "n_y", "sub_count", "oversample", "astep_deg")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be non-negative")
        if self.rstep < 0:
            raise ConfigError("rstep must be non-negative")
        if self.target not in {k.value for k in Kind}:
            raise ConfigError(f"unknown target {self.target!r}")
        if self.layout not in ("linear", "planar", "distributed"):
            raise ConfigError(f"unknown layout {self.layout!r}")
        if self.pattern not in ("isotropic", "cosine"):
            raise ConfigError(f"unknown pattern {self.pattern!r}")
        if self.model not in ("extended", "point"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.sweep_angle not in ("azimuth", "elevation"):
            raise ConfigError(f"unknown sweep_angle {self.sweep_angle!r}")
        if self.oversample < 2:
            raise ConfigError("oversample must be at least 2")

    # -- derived constants --------------------------------------------------
    @property
    def wavelength(self) -> float:
        return C / self.fc

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def eta(self) -> float:
        return ETA

    @property
    def azimuth(self) -> float:
        return math.radians(self.azimuth_deg)

    @property
    def elevation(self) -> float:
        return math.radians(self.elevation_deg)

    @property
    def range_step(self) -> float:
        return self.rstep if self.rstep > 0 else self.wavelength / 8

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # -- derived objects ----------------------------------------------------
    def layout_spec(self):
        if self.layout == "linear":
            return Linear(self.n, self.spacing, self.range_m)
        if self.layout == "planar":
            return Planar(self.n_y, self.n, self.spacing, self.range_m)
        return Distributed(Linear(self.n, self.spacing, self.range_m), self.sub_count,
                           self.sub_spacing)

    def antenna_layout(self) -> AntennaLayout:
        return build_layout(self.layout_spec())

    def surface(self) -> TargetSurface:
        """Target shape in its local frame (not yet placed)."""
        kind = Kind(self.target)
        if kind is Kind.PLATE:
            return TargetSurface.plate(self.d_y, self.d_z)
        if kind is Kind.SPHERE:
            return TargetSurface.sphere(self.rho)
        return TargetSurface.cylinder(self.rho, self.cyl_length)

    def true_surface(self) -> TargetSurface:
        """Target placed at the true pose relative to the array centre."""
        return surface_at_pose(self.surface(), self.antenna_layout().centre, self.range_m,
                               self.azimuth, self.elevation)


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(name, text):
    kind = _FIELD_TYPES[name]
    try:
        if kind in ("int", int):
            return int(float(text)) if str(text).strip().lower() not in ("",) else 0
        if kind in ("float", float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return str(text)


def from_mapping(values: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    base = base or ScenarioConfig()
    changes = {}
    for key, value in values.items():
        name = key.strip().replace("-", "_")
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        changes[name] = _coerce(name, value) if isinstance(value, str) else value
    return dataclasses.replace(base, **changes)


def parse_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return from_mapping(values, base)


def load(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return parse_text(Path(path).read_text(), base)


def format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def serialize(config: ScenarioConfig) -> str:
    return "".join(f"{f.name} = {format_value(getattr(config, f.name))}\n"
                   for f in fields(ScenarioConfig))

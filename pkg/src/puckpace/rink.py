"""Rink geometry: parametric rink, zones and the attacking-frame convention.

Coordinates are centre-origin feet.  In the attacking frame ``x_north`` grows
toward the goal being attacked and ``y_east`` runs across the rink width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ConfigError, RinkBoundaryError

# Boundary slack for floating point round-off on points written to text.
EPS = 1e-9


class Zone(str, Enum):
    DZ = "DZ"
    NZ = "NZ"
    OZ = "OZ"

    @property
    def code(self) -> int:
        return ZONES.index(self)

    def mirror(self) -> "Zone":
        return {Zone.DZ: Zone.OZ, Zone.NZ: Zone.NZ, Zone.OZ: Zone.DZ}[self]


ZONES = (Zone.DZ, Zone.NZ, Zone.OZ)


@dataclass(frozen=True)
class RinkSpec:
    length_ft: float = 200.0
    width_ft: float = 85.0
    corner_radius_ft: float = 28.0
    blue_line_offset_ft: float = 25.0
    goal_line_offset_ft: float = 11.0
    cell_size_ft: float = 5.0
    name: str = "custom"

    def __post_init__(self):
        for f in ("length_ft", "width_ft", "blue_line_offset_ft", "goal_line_offset_ft", "cell_size_ft"):
            v = getattr(self, f)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{f} must be a positive number, got {v!r}")
        if not (math.isfinite(self.corner_radius_ft) and self.corner_radius_ft >= 0):
            raise ConfigError(f"corner_radius_ft must be non-negative, got {self.corner_radius_ft!r}")
        if 2 * self.blue_line_offset_ft >= self.length_ft:
            raise ConfigError("blue lines must lie inside the rink (2*blue_line_offset_ft < length_ft)")
        if self.corner_radius_ft > min(self.length_ft, self.width_ft) / 2:
            raise ConfigError("corner_radius_ft exceeds half the smaller rink dimension")
        if self.goal_line_offset_ft >= self.length_ft / 2:
            raise ConfigError("goal_line_offset_ft must be less than half the rink length")

    @property
    def half_length(self) -> float:
        return self.length_ft / 2

    @property
    def half_width(self) -> float:
        return self.width_ft / 2

    @property
    def goal_x(self) -> float:
        """x_north of the attacked goal line centre."""
        return self.half_length - self.goal_line_offset_ft

    def contains(self, x: float, y: float) -> bool:
        return bool(contains_many(self, np.asarray([x], float), np.asarray([y], float))[0])

    def area(self) -> float:
        """Closed-form in-rink area."""
        r = self.corner_radius_ft
        return self.length_ft * self.width_ft - (4 - math.pi) * r * r


def contains_many(spec: RinkSpec, x: np.ndarray, y: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Vectorised point-in-rounded-rectangle test (boundary counts as inside)."""
    ax = np.abs(np.asarray(x, dtype=float))
    ay = np.abs(np.asarray(y, dtype=float))
    inside = (ax <= spec.half_length + eps) & (ay <= spec.half_width + eps)
    r = spec.corner_radius_ft
    if r > 0:
        cx = spec.half_length - r
        cy = spec.half_width - r
        in_corner = (ax > cx) & (ay > cy)
        dx = ax - cx
        dy = ay - cy
        outside_arc = dx * dx + dy * dy > (r + eps) ** 2
        inside &= ~(in_corner & outside_arc)
    return inside


@dataclass(frozen=True)
class NormalizedPoint:
    x_north: float
    y_east: float

    def __neg__(self) -> "NormalizedPoint":
        return NormalizedPoint(-self.x_north, -self.y_east)


NHL = RinkSpec(name="nhl")
AHL = replace(NHL, name="ahl")
# Width 100 ft is the 5 ft multiple nearest 98.5 ft, so the grid stays on the
# cell lattice.  Blue line 4 ft further out, goal line 6 ft closer to it.
SHL = RinkSpec(
    length_ft=200.0,
    width_ft=100.0,
    corner_radius_ft=28.0,
    blue_line_offset_ft=29.0,
    goal_line_offset_ft=13.0,
    name="shl",
)
PRESETS = {"nhl": NHL, "ahl": AHL, "shl": SHL}


def normalize(raw_x: float, raw_y: float, attack_sign: int, spec: RinkSpec = NHL) -> NormalizedPoint:
    if attack_sign not in (1, -1):
        raise ValueError(f"attack_sign must be +1 or -1, got {attack_sign!r}")
    if not spec.contains(raw_x, raw_y):
        raise RinkBoundaryError(f"point ({raw_x}, {raw_y}) lies outside the {spec.name} rink")
    return NormalizedPoint(attack_sign * raw_x, attack_sign * raw_y)


def zone_of(p: NormalizedPoint, spec: RinkSpec = NHL) -> Zone:
    return ZONES[int(zone_codes(np.asarray([p.x_north]), spec)[0])]


def zone_codes(x_north: np.ndarray, spec: RinkSpec) -> np.ndarray:
    """0 = DZ, 1 = NZ, 2 = OZ.  Blue-line points belong to the neutral zone."""
    b = spec.blue_line_offset_ft
    x = np.asarray(x_north, dtype=float)
    out = np.ones(x.shape, dtype=np.int8)
    out[x < -b] = 0
    out[x > b] = 2
    return out


_FLOAT_KEYS = {f.name for f in fields(RinkSpec) if f.name != "name"}


def parse_rink_config(text: str, name: str = "custom") -> RinkSpec:
    """Parse ``key = value`` lines.  ``preset = shl`` seeds the remaining keys."""
    values: dict = {}
    base = NHL
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"rink config line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            if val.lower() not in PRESETS:
                raise ConfigError(f"rink config line {lineno}: unknown preset {val!r}")
            base = PRESETS[val.lower()]
        elif key == "name":
            name = val
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(val)
            except ValueError:
                raise ConfigError(f"rink config line {lineno}: {key} is not a number") from None
        else:
            raise ConfigError(f"rink config line {lineno}: unknown key {key!r}")
    return replace(base, name=name, **values)


def load_rink(name_or_path: Union[str, Path, RinkSpec, None]) -> RinkSpec:
    if name_or_path is None:
        return NHL
    if isinstance(name_or_path, RinkSpec):
        return name_or_path
    key = str(name_or_path)
    if key.lower() in PRESETS:
        return PRESETS[key.lower()]
    path = Path(key)
    if not path.exists():
        raise ConfigError(f"unknown rink preset or missing file: {key}")
    return parse_rink_config(path.read_text(encoding="utf-8"), name=path.stem)

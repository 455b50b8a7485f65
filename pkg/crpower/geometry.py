"""Polar and Cartesian positions around the TV base station.

The base station sits at the origin. Every receiver and transmitter position
is a PolarPoint (r in meters, phi in radians); Cartesian points are used as
the intermediate form for straight-line motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_TWO_PI = 2.0 * math.pi


def _normalize_angle(phi: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    wrapped = math.fmod(phi, _TWO_PI)
    if wrapped < 0.0:
        wrapped += _TWO_PI
    # fmod of a tiny negative value can round up to exactly 2*pi
    if wrapped >= _TWO_PI:
        wrapped = 0.0
    return wrapped


@dataclass(frozen=True)
class CartesianPoint:
    """Point in the plane, meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Cartesian components must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: CartesianPoint) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class PolarPoint:
    """Position relative to the base station: radius in meters, azimuth in radians."""

    r: float
    phi: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.r) or self.r < 0.0:
            raise ValueError(f"Radial distance must be finite and >= 0, got {self.r}")
        if not math.isfinite(self.phi):
            raise ValueError(f"Azimuth must be finite, got {self.phi}")
        object.__setattr__(self, "phi", _normalize_angle(self.phi))

    @classmethod
    def from_degrees(cls, r: float, phi_deg: float) -> PolarPoint:
        return cls(r, math.radians(phi_deg))

    @classmethod
    def from_cartesian(cls, point: CartesianPoint) -> PolarPoint:
        """Convert with a four-quadrant arctangent."""
        return cls(math.hypot(point.x, point.y), math.atan2(point.y, point.x))

    def to_cartesian(self) -> CartesianPoint:
        return CartesianPoint(self.r * math.cos(self.phi), self.r * math.sin(self.phi))


def relative_angle(phi_a: float, phi_b: float) -> float:
    """Wrapped absolute angular difference, in [0, pi].

    Args:
        phi_a: First azimuth, radians.
        phi_b: Second azimuth, radians.

    Returns:
        min(|delta|, 2*pi - |delta|) with delta taken modulo 2*pi.
    """
    delta = abs(_normalize_angle(phi_a) - _normalize_angle(phi_b))
    return min(delta, _TWO_PI - delta)


def separation(a: PolarPoint, b: PolarPoint) -> float:
    """Law-of-cosines distance between two polar points, meters."""
    theta = relative_angle(a.phi, b.phi)
    squared = a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * math.cos(theta)
    # Cancellation can leave a tiny negative value for coincident points
    return math.sqrt(max(0.0, squared))

"""Great-circle paths between square-root densities.

``sqrt(p1)`` and ``sqrt(p2)`` are unit vectors whose inner product is the
Bhattacharyya coefficient ``cos(theta)``. Points on the arc between them are
again square roots of probability vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dist import BinnedDistribution, require_same_support, require_valid
from .divergences import bhattacharyya


class DegenerateGeodesicError(ValueError):
    """The endpoints coincide, so the angle between them is zero."""


class DegenerateGeodesicWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GeodesicPoint:
    phi: float
    theta: float
    distribution: BinnedDistribution


def angle(p1: BinnedDistribution, p2: BinnedDistribution) -> float:
    """``arccos`` of the Bhattacharyya coefficient, clamped into [0, 1] first."""
    return math.acos(min(1.0, max(0.0, bhattacharyya(p1, p2))))


def _checked_angle(p1: BinnedDistribution, p2: BinnedDistribution) -> float:
    require_same_support(p1, p2)
    require_valid(p1)
    require_valid(p2)
    theta = angle(p1, p2)
    if theta == 0.0 or np.array_equal(p1.masses, p2.masses):
        raise DegenerateGeodesicError("p1 and p2 coincide; the geodesic is a single point")
    return theta


def geodesic_point(p1: BinnedDistribution, p2: BinnedDistribution, phi: float) -> GeodesicPoint:
    """The point at angle ``phi`` from ``p1`` along the arc to ``p2``."""
    theta = _checked_angle(p1, p2)
    if not 0.0 <= phi <= theta:
        raise ValueError(f"phi={phi} outside [0, theta={theta}]")
    label = f"geo({p1.label},{p2.label},{phi:.6g})"
    if phi == 0.0:
        return GeodesicPoint(phi, theta, p1.relabel(label))
    if phi == theta:
        return GeodesicPoint(phi, theta, p2.relabel(label))
    root = (
        math.sin(theta - phi) * np.sqrt(p1.masses) + math.sin(phi) * np.sqrt(p2.masses)
    ) / math.sin(theta)
    dist = BinnedDistribution(root * root, p1.kind, p1.lo, p1.hi, label)
    return GeodesicPoint(phi, theta, dist)


def hellinger_midpoint(p1: BinnedDistribution, p2: BinnedDistribution) -> BinnedDistribution:
    """The arc midpoint ``u``, equidistant from both endpoints in Hellinger distance."""
    theta = _checked_angle(p1, p2)
    scale = math.sin(theta / 2) / math.sin(theta)
    root = scale * (np.sqrt(p1.masses) + np.sqrt(p2.masses))
    return BinnedDistribution(root * root, p1.kind, p1.lo, p1.hi, f"mid({p1.label},{p2.label})")


def critical_radius(p1: BinnedDistribution, p2: BinnedDistribution) -> float:
    """``1 - cos(theta / 2)``: the squared-Hellinger radius at which balls around p1 and p2 touch.

    Equal endpoints give 0.0 and emit :class:`DegenerateGeodesicWarning`.
    """
    try:
        theta = _checked_angle(p1, p2)
    except DegenerateGeodesicError:
        warnings.warn("p1 == p2: critical radius is 0", DegenerateGeodesicWarning, stacklevel=2)
        return 0.0
    # 1 - cos(x) written as 2 sin^2(x/2) to avoid cancellation for close pairs
    return 2.0 * math.sin(theta / 4) ** 2

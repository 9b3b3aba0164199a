# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""
Round sphere S^n(R) with the singular point at the north pole.

In geodesic polar coordinates about the pole the volume element is
omega(r) dr dsigma with omega(r) = w_(n-1) (R sin(r/R))^(n-1), so the volume
density is G(r) = (R sin(r/R) / r)^(n-1) = 1 - (n-1) r^2 / (6 R^2) + O(r^4).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from hslab.constants import unit_sphere_area
from hslab.errors import ParameterError

__all__ = [
    "SphereModel",
    "PotentialField",
    "volume_density",
    "measure",
    "potential",
    "rho",
    "cutoff",
    "cutoff_derivative",
    "cutoff_second_derivative",
    "CUTOFF_SLOPE_BOUND",
]

logger = logging.getLogger(__name__)

# sup |eta'| * delta of the quintic smoothstep transition
CUTOFF_SLOPE_BOUND = 1.875


@dataclass(frozen=True)
class SphereModel:
    n: int
    radius: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ParameterError(f"n must be an integer >= 3, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.radius > 0.0 or not math.isfinite(self.radius):
            raise ParameterError(f"sphere radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def injectivity_radius(self) -> float:
        return math.pi * self.radius

    @property
    def scal_p(self) -> float:
        return self.n * (self.n - 1) / self.radius ** 2

    @property
    def omega(self) -> float:
        return unit_sphere_area(self.n - 1)

    @property
    def density_coefficient(self) -> float:
        """Exact r^2 coefficient of G(r): -(n-1)/(6R^2) = -Scal/(6n)."""
        return -(self.n - 1) / (6.0 * self.radius ** 2)

    @property
    def total_volume(self) -> float:
        return unit_sphere_area(self.n) * self.radius ** self.n


def _check_range(model: SphereModel, r, *, closed: bool):
    r = np.asarray(r, dtype=float)
    top = model.injectivity_radius
    bad = (r < 0.0) | (r > top) if closed else (r < 0.0) | (r >= top)
    if np.any(bad):
        bound = "[0, pi R]" if closed else "[0, pi R)"
        raise ParameterError(f"geodesic distance outside {bound} = [0, {top:.6g}]")
    return r


def _out(value, r):
    return float(value) if np.ndim(r) == 0 else value


def volume_density(model: SphereModel, r):
    """G(r) = (R sin(r/R) / r)^(n-1); np.sinc handles r = 0."""
    r = _check_range(model, r, closed=False)
    return _out(np.sinc(r / model.injectivity_radius) ** (model.n - 1), r)


def measure(model: SphereModel, r):
    """Radial measure weight omega(r) = w_(n-1) (R sin(r/R))^(n-1) on [0, pi R]."""
    r = _check_range(model, r, closed=True)
    R = model.radius
    return _out(model.omega * np.abs(R * np.sin(r / R)) ** (model.n - 1), r)


@dataclass(frozen=True)
class PotentialField:
    """Radial potential h(r) = h0 + h2 r^2, frozen at its value beyond delta_cap."""

    n: int
    h0: float
    h2: float = 0.0
    delta_cap: float = math.inf

    def __post_init__(self):
        for name in ("h0", "h2", "delta_cap"):
            value = float(getattr(self, name))
            if math.isnan(value):
                raise ParameterError(f"{name} must be a number")
            object.__setattr__(self, name, value)
        if not self.delta_cap > 0.0:
            raise ParameterError(f"delta_cap must be positive, got {self.delta_cap!r}")

    @property
    def lap_h_p(self) -> float:
        """Delta h(p) under Delta = -div grad: -2 n h2."""
        return -2.0 * self.n * self.h2

    def check_singular_range(self, hardy_bound: float) -> None:
        if not 0.0 < self.h0 < hardy_bound:
            raise ParameterError(
                f"h(p) = {self.h0!r} must lie in (0, 1/K(n,2,-2)^2) = (0, {hardy_bound:.12g})"
            )


def rho(model: SphereModel, r):
    """Distance to the pole, capped at the injectivity radius."""
    r = _check_range(model, r, closed=True)
    return _out(np.minimum(r, model.injectivity_radius), r)


def potential(model: SphereModel, field: PotentialField, r):
    r = _check_range(model, r, closed=True)
    capped = np.minimum(r, field.delta_cap)
    return _out(field.h0 + field.h2 * capped * capped, r)


# ----- Cutoff -----

def _transition(delta: float, r):
    if not delta > 0.0:
        raise ParameterError(f"cutoff delta must be positive, got {delta!r}")
    r = np.asarray(r, dtype=float)
    return r, np.clip((r - delta) / delta, 0.0, 1.0)


def cutoff(delta: float, r):
    """eta_delta: 1 on [0, delta], 0 on [2 delta, inf), quintic smoothstep between."""
    r, x = _transition(delta, r)
    return _out(1.0 - x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x), r)


def cutoff_derivative(delta: float, r):
    r, x = _transition(delta, r)
    return _out(-30.0 * x * x * (1.0 - x) ** 2 / delta, r)


def cutoff_second_derivative(delta: float, r):
    r, x = _transition(delta, r)
    return _out(-60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / delta ** 2, r)

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
Graded radial grid on (0, pi R) and nodal fields living on it.

Nodes follow r_i = pi R (exp(kappa xi_i) - 1) / (exp(kappa) - 1) with
xi_i = (i + 1) / (N + 1): uniform spacing near the pole, geometric ratio
exp(kappa / (N + 1)) further out. kappa is solved for so that r_0 hits the
requested first node.

Fields are P1 between nodes and constant on the two end cells [0, r_0] and
[r_(N-1), pi R], which realises the natural boundary conditions. Weights:

  stiffness[i]  int_(r_i)^(r_(i+1)) omega dr / (r_(i+1) - r_i)^2
  mass[i]       int over the dual cell of node i of omega dr
  hardy[i]      int over the dual cell of node i of omega h / rho^2 dr

all by 8-point Gauss-Legendre per cell.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from hslab.errors import ParameterError
from hslab.manifold import PotentialField, SphereModel, measure, potential, rho

__all__ = ["RadialGrid", "DiscreteRadialField", "DEFAULT_NODES", "DEFAULT_FIRST_NODE"]

logger = logging.getLogger(__name__)

DEFAULT_NODES = 4096
DEFAULT_FIRST_NODE = 1e-6
_GAUSS_POINTS = 8


def _cell_integrals(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray):
    x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return half * (f(pts) @ w)


def _solve_kappa(n_nodes: int, first_node: float, top: float) -> float:
    xi0 = 1.0 / (n_nodes + 1)
    uniform = top * xi0
    if first_node >= uniform:
        return 0.0

    def mismatch(kappa):
        return math.log(top * math.expm1(kappa * xi0) / math.expm1(kappa)) - math.log(first_node)

    return optimize.brentq(mismatch, 1e-9, 700.0, xtol=1e-14, rtol=1e-14)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    model: SphereModel
    nodes: np.ndarray
    stiffness: np.ndarray
    mass: np.ndarray
    dual_edges: np.ndarray
    grading: dict = field(default_factory=dict)

    @classmethod
    def build(cls, model: SphereModel, n_nodes: int = DEFAULT_NODES,
              first_node: float | None = None) -> "RadialGrid":
        """Graded grid with first node first_node * R (default 1e-6 R)."""
        if n_nodes < 16:
            raise ParameterError(f"grid needs at least 16 nodes, got {n_nodes}")
        top = model.injectivity_radius
        target = (DEFAULT_FIRST_NODE if first_node is None else first_node) * model.radius
        if not 0.0 < target < top / 4.0:
            raise ParameterError(f"first node {target!r} outside (0, pi R / 4)")
        kappa = _solve_kappa(n_nodes, target, top)
        xi = np.arange(1, n_nodes + 1) / (n_nodes + 1)
        if kappa == 0.0:
            nodes = top * xi
        else:
            nodes = top * np.expm1(kappa * xi) / math.expm1(kappa)

        omega = lambda r: measure(model, r)  # noqa: E731
        widths = np.diff(nodes)
        stiffness = _cell_integrals(omega, nodes[:-1], nodes[1:]) / widths ** 2
        edges = np.concatenate(([0.0], 0.5 * (nodes[:-1] + nodes[1:]), [top]))
        mass = _cell_integrals(omega, edges[:-1], edges[1:])
        grading = {
            "n_nodes": int(n_nodes),
            "kappa": float(kappa),
            "first_node": float(nodes[0]),
            "last_node": float(nodes[-1]),
            "ratio": float(math.exp(kappa / (n_nodes + 1))),
        }
        logger.debug("radial grid: %s", grading)
        return cls(model, nodes, stiffness, mass, edges, grading)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def quadrature_weights(self) -> np.ndarray:
        return self.mass

    def hardy_weights(self, pot: PotentialField) -> np.ndarray:
        """Dual-cell integrals of omega h / rho^2 for the given potential."""
        model = self.model

        def integrand(r):
            return measure(model, r) * potential(model, pot, r) / rho(model, r) ** 2

        return _cell_integrals(integrand, self.dual_edges[:-1], self.dual_edges[1:])

    def integrate(self, values) -> float:
        return float(self.mass @ np.asarray(values, dtype=float))

    def from_values(self, values) -> "DiscreteRadialField":
        return DiscreteRadialField(self, np.asarray(values, dtype=float))

    def sample(self, f: Callable[[np.ndarray], np.ndarray]) -> "DiscreteRadialField":
        return self.from_values(f(self.nodes))

    def interpolate(self, r, values) -> "DiscreteRadialField":
        """P1 interpolation of (r, values) onto the nodes, constant beyond the data."""
        r = np.asarray(r, dtype=float)
        if r.size < 2 or np.any(np.diff(r) <= 0.0):
            raise ParameterError("interpolation needs at least two increasing radii")
        return self.from_values(np.interp(self.nodes, r, np.asarray(values, dtype=float)))

    def zeros(self) -> "DiscreteRadialField":
        return self.from_values(np.zeros_like(self.nodes))


@dataclass(frozen=True, eq=False)
class DiscreteRadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ParameterError(
                f"field has shape {values.shape}, grid has {self.grid.nodes.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def scaled(self, factor: float) -> "DiscreteRadialField":
        return DiscreteRadialField(self.grid, factor * self.values)

    def __add__(self, other: "DiscreteRadialField") -> "DiscreteRadialField":
        if other.grid is not self.grid:
            raise ParameterError("fields live on different grids")
        return DiscreteRadialField(self.grid, self.values + other.values)

    def __sub__(self, other: "DiscreteRadialField") -> "DiscreteRadialField":
        return self + other.scaled(-1.0)

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.grid.nodes.tolist(), self.values.tolist()))

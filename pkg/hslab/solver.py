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
Discrete radial energy on the sphere and its Nehari-constrained minimisation.

    J_h(u) = 1/2 u.K.u - 1/2 sum H_i u_i^2 - 1/2* sum m_i |u_i|^(2*)

with the stiffness K, Hardy weights H and lumped mass m of grid.RadialGrid.
The Nehari scaling multiplies u by (N(u)/C(u))^((n-2)/4) where
N(u) = u.K.u - sum H u^2 and C(u) = sum m |u|^(2*); on the Nehari set
J_h(u) = C(u)/n.

minimize() alternates a search over dilations of the iterate with
Sobolev-gradient descent (Riesz map K + |H| + M, Armijo backtracking, a
projection after every trial) and polishes with damped Newton steps on the
tridiagonal Euler-Lagrange system until the residual drops below
SolverConfig.residual_tol.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from hslab.constants import ProblemParams, compute_constants
from hslab.errors import NehariProjectionError, ParameterError
from hslab.grid import DiscreteRadialField, RadialGrid
from hslab.manifold import PotentialField
from hslab.workers import ordered_map

__all__ = [
    "Classification",
    "EnergyComponents",
    "SolverConfig",
    "SolverResult",
    "DiscreteFunctional",
    "discrete_energy",
    "gradient",
    "nehari_scale",
    "nehari_project",
    "projected_energy",
    "max_along_ray",
    "residual_norm",
    "coercivity_check",
    "classify",
    "minimize",
    "multistart",
    "relative_spread",
]

logger = logging.getLogger(__name__)

CLASSIFICATION_MARGIN = 1e-8


class Classification(str, enum.Enum):
    IN_0_DSTAR = "in_0_Dstar"
    IN_DSTAR_2DSTAR = "in_Dstar_2Dstar"
    AT_OR_ABOVE_2DSTAR = "at_or_above_2Dstar"
    NONPOSITIVE = "nonpositive"


@dataclass(frozen=True)
class EnergyComponents:
    gradient: float
    hardy: float
    critical: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {"gradient": self.gradient, "hardy": self.hardy,
                "critical": self.critical, "total": self.total}


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 2000
    energy_tol: float = 1e-10
    armijo: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-12
    max_step: float = 8.0
    patience: int = 5
    rounds: int = 6
    dilation_points: int = 41
    dilation_range: tuple[float, float] = (-2.0, 8.0)
    newton_iter: int = 60
    newton_tol: float = 1e-10
    min_damping: float = 2.0 ** -20
    residual_tol: float = 1e-6
    agreement_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iter < 0 or self.newton_iter < 0:
            raise ParameterError("iteration caps must be nonnegative")
        if self.patience < 1 or self.rounds < 1:
            raise ParameterError("patience and rounds must be positive")
        if not 0.0 < self.armijo < 0.5:
            raise ParameterError(f"armijo parameter must lie in (0, 0.5), got {self.armijo}")
        if not 0.0 < self.shrink < 1.0:
            raise ParameterError(f"shrink factor must lie in (0, 1), got {self.shrink}")
        if not 0.0 < self.min_step <= self.max_step:
            raise ParameterError(f"step bounds must satisfy 0 < min_step <= max_step, "
                                 f"got {self.min_step}, {self.max_step}")
        if not 0.0 < self.min_damping <= 1.0:
            raise ParameterError(f"minimum damping must lie in (0, 1], got {self.min_damping}")
        lo, hi = self.dilation_range
        if self.dilation_points and (self.dilation_points < 3 or not lo < 0.0 < hi):
            raise ParameterError("dilation search needs at least 3 points on a range around 0")
        if self.residual_tol <= 0.0 or self.agreement_tol <= 0.0:
            raise ParameterError("acceptance tolerances must be positive")


class DiscreteFunctional:
    """Assembled J_h for one grid and potential."""

    def __init__(self, grid: RadialGrid, pot: PotentialField):
        if pot.n != grid.model.n:
            raise ParameterError(f"potential is for n={pot.n}, grid for n={grid.model.n}")
        self.grid = grid
        self.potential = pot
        self.n = grid.model.n
        self.p = 2.0 * self.n / (self.n - 2)
        self.stiffness = grid.stiffness
        self.mass = grid.mass
        self.hardy = grid.hardy_weights(pot)
        self.log_nodes = np.log(grid.nodes)

    def apply_stiffness(self, u: np.ndarray) -> np.ndarray:
        flux = self.stiffness * np.diff(u)
        ku = np.zeros_like(u)
        ku[:-1] -= flux
        ku[1:] += flux
        return ku

    def components(self, u: np.ndarray) -> EnergyComponents:
        grad = float(self.stiffness @ np.diff(u) ** 2)
        hardy = float(self.hardy @ (u * u))
        crit = float(self.mass @ np.abs(u) ** self.p)
        total = 0.5 * grad - 0.5 * hardy - crit / self.p
        return EnergyComponents(grad, hardy, crit, total)

    def energy(self, u: np.ndarray) -> float:
        return self.components(u).total

    def numerator(self, u: np.ndarray) -> float:
        return float(self.stiffness @ np.diff(u) ** 2 - self.hardy @ (u * u))

    def critical(self, u: np.ndarray) -> float:
        return float(self.mass @ np.abs(u) ** self.p)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.apply_stiffness(u) - self.hardy * u - self.mass * np.abs(u) ** (self.p - 2.0) * u

    def scale(self, u: np.ndarray) -> float:
        num, crit = self.numerator(u), self.critical(u)
        if not num > 0.0 or not crit > 0.0:
            raise NehariProjectionError(
                "Nehari scaling undefined: numerator or critical integral is nonpositive "
                "(below the Hardy threshold, or an indefinite direction)",
                numerator=num, critical=crit,
            )
        return (num / crit) ** ((self.n - 2) / 4.0)

    def project(self, u: np.ndarray) -> np.ndarray:
        return self.scale(u) * u

    def weighted_norm(self, g: np.ndarray) -> float:
        return float(math.sqrt(np.sum(g * g / self.mass)))

    def residual_norm(self, u: np.ndarray) -> float:
        return self.weighted_norm(self.gradient(u))

    def _tridiagonal(self, diag: np.ndarray) -> np.ndarray:
        c = self.stiffness
        ab = np.zeros((3, c.size + 1))
        ab[0, 1:] = -c
        ab[2, :-1] = -c
        ab[1, :] = diag
        ab[1, :-1] += c
        ab[1, 1:] += c
        return ab

    def riesz_matrix(self) -> np.ndarray:
        """Banded K + |H| + M."""
        return self._tridiagonal(np.abs(self.hardy) + self.mass)

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        """Banded K - H - (2*-1) M |u|^(2*-2)."""
        return self._tridiagonal(-self.hardy - (self.p - 1.0) * self.mass * np.abs(u) ** (self.p - 2.0))


@functools.lru_cache(maxsize=8)
def _functional(grid: RadialGrid, pot: PotentialField) -> DiscreteFunctional:
    return DiscreteFunctional(grid, pot)


# ----- Operations on fields -----

def discrete_energy(u: DiscreteRadialField, pot: PotentialField) -> EnergyComponents:
    """J_h of a nodal field with its three integrals."""
    return _functional(u.grid, pot).components(u.values)


def gradient(u: DiscreteRadialField, pot: PotentialField) -> np.ndarray:
    return _functional(u.grid, pot).gradient(u.values)


def nehari_scale(u: DiscreteRadialField, pot: PotentialField) -> float:
    return _functional(u.grid, pot).scale(u.values)


def nehari_project(u: DiscreteRadialField, pot: PotentialField) -> DiscreteRadialField:
    """Phi(u), the point of the ray through u where DJ_h(v).v = 0."""
    return u.scaled(nehari_scale(u, pot))


def residual_norm(u: DiscreteRadialField, pot: PotentialField) -> float:
    """Discrete L2 norm of the Euler-Lagrange residual, sqrt(sum g_i^2 / m_i)."""
    return _functional(u.grid, pot).residual_norm(u.values)


def coercivity_check(grid: RadialGrid, pot: PotentialField) -> float:
    """Nehari numerator of the constant field 1, i.e. -int h/rho^2 omega.

    A nonpositive value means the quadratic form is not coercive: the Nehari
    infimum is 0 and no minimiser exists.
    """
    return -float(np.sum(_functional(grid, pot).hardy))


def projected_energy(numerator: float, critical: float, n: int) -> float:
    """J(Phi(u)) = (1/n) (N / C^(2/2*))^(n/2) from the two homogeneous parts."""
    if not numerator > 0.0 or not critical > 0.0:
        raise NehariProjectionError("projected energy needs positive numerator and critical part",
                                    numerator=numerator, critical=critical)
    p = 2.0 * n / (n - 2)
    return (numerator / critical ** (2.0 / p)) ** (n / 2.0) / n


def max_along_ray(numerator: float, critical: float, n: int) -> tuple[float, float]:
    """(t, J(t u)) at the maximum of t -> t^2 N/2 - t^(2*) C/2* found by a 1D search."""
    p = 2.0 * n / (n - 2)

    def neg(t):
        return -(0.5 * t * t * numerator - t ** p * critical / p)

    t_star = (numerator / critical) ** (1.0 / (p - 2.0))
    res = optimize.minimize_scalar(neg, bounds=(0.0, 3.0 * t_star), method="bounded",
                                   options={"xatol": 1e-12 * t_star})
    return float(res.x), float(-res.fun)


def classify(energy: float, params: ProblemParams,
             margin: float = CLASSIFICATION_MARGIN) -> tuple[Classification, bool]:
    """Energy window against {0, D*, 2D*}; the flag marks a value within margin*D* of a boundary."""
    d_star = compute_constants(params).D_star
    tol = margin * d_star
    boundaries = (0.0, d_star, 2.0 * d_star)
    flag = any(abs(energy - b) <= tol for b in boundaries)
    if energy <= tol:
        return Classification.NONPOSITIVE, flag
    if energy < d_star - tol:
        return Classification.IN_0_DSTAR, flag
    if energy < 2.0 * d_star - tol:
        return Classification.IN_DSTAR_2DSTAR, flag
    return Classification.AT_OR_ABOVE_2DSTAR, flag


# ----- Minimisation -----

@dataclass(frozen=True, eq=False)
class SolverResult:
    minimizer: DiscreteRadialField
    energy: float
    components: EnergyComponents
    residual_norm: float
    iterations: int
    newton_iterations: int
    classification: Classification
    boundary_flag: bool
    coercive: bool
    history: tuple = field(default_factory=tuple)
    diagnostic: str | None = None

    def as_dict(self) -> dict:
        return {
            "energy": self.energy,
            "components": self.components.as_dict(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "newton_iterations": self.newton_iterations,
            "classification": self.classification.value,
            "boundary_flag": self.boundary_flag,
            "coercive": self.coercive,
            "diagnostic": self.diagnostic,
        }


def _descent(F: DiscreteFunctional, u: np.ndarray, config: SolverConfig, budget: int):
    """Projected Sobolev-gradient steps until the residual is small or the energy stagnates."""
    riesz = F.riesz_matrix()
    energy = F.energy(u)
    history = [energy]
    step = 1.0
    diagnostic = None
    taken = flat = 0
    while taken < budget:
        g = F.gradient(u)
        if F.weighted_norm(g) <= 0.1 * config.residual_tol:
            break
        d = linalg.solve_banded((1, 1), riesz, g)
        slope = float(g @ d)
        if not slope > 0.0:
            break
        s = min(2.0 * step, config.max_step)
        trial = None
        while s >= config.min_step:
            try:
                candidate = F.project(u - s * d)
            except NehariProjectionError:
                s *= config.shrink
                continue
            cand_energy = F.energy(candidate)
            if cand_energy <= energy - config.armijo * s * slope:
                trial = candidate
                break
            s *= config.shrink
        if trial is None:
            diagnostic = "line search stalled"
            logger.debug("descent: line search stalled after %d steps", taken)
            break
        decrease = energy - cand_energy
        u, energy, step = trial, cand_energy, s
        taken += 1
        history.append(energy)
        logger.debug("descent %d: J=%.15g step=%.3g", taken, energy, s)
        flat = flat + 1 if decrease <= config.energy_tol * abs(energy) else 0
        if flat >= config.patience:
            break
    return u, taken, history, diagnostic


def _dilate(F: DiscreteFunctional, u: np.ndarray, shift: float) -> np.ndarray:
    """Nodal values of r -> u(r e^-shift), held constant beyond the end nodes."""
    x = F.log_nodes
    return np.interp(x - shift, x, u)


def _dilation_search(F: DiscreteFunctional, u: np.ndarray, config: SolverConfig):
    """Best Nehari-projected dilation u(r/t) over log t in config.dilation_range.

    Returns (field, energy, log t); the field is u itself when no dilation
    lowers the projected energy.
    """
    energy = F.energy(u)
    if not config.dilation_points:
        return u, energy, 0.0

    def projected(shift):
        v = _dilate(F, u, shift)
        try:
            return projected_energy(F.numerator(v), F.critical(v), F.n)
        except NehariProjectionError:
            return math.inf

    lo, hi = config.dilation_range
    shifts = np.unique(np.append(np.linspace(lo, hi, config.dilation_points), 0.0))
    values = np.array([projected(s) for s in shifts])
    k = int(np.argmin(values))
    if not math.isfinite(values[k]):
        return u, energy, 0.0
    shift, best = float(shifts[k]), float(values[k])
    left, right = shifts[max(k - 1, 0)], shifts[min(k + 1, shifts.size - 1)]
    if right > left:
        res = optimize.minimize_scalar(projected, bounds=(left, right), method="bounded",
                                       options={"xatol": 1e-6})
        if res.fun < best:
            shift, best = float(res.x), float(res.fun)
    if shift == 0.0 or best >= energy - config.energy_tol * abs(energy):
        return u, energy, 0.0
    moved = F.project(_dilate(F, u, shift))
    moved_energy = F.energy(moved)
    if moved_energy >= energy:
        return u, energy, 0.0
    logger.debug("dilation: log t=%.4g J %.15g -> %.15g", shift, energy, moved_energy)
    return moved, moved_energy, shift


def _newton(F: DiscreteFunctional, u: np.ndarray, config: SolverConfig):
    """Newton on the Euler-Lagrange system with Armijo backtracking on the residual."""
    res = F.residual_norm(u)
    done = 0
    for _ in range(config.newton_iter):
        if res <= config.newton_tol:
            break
        try:
            du = linalg.solve_banded((1, 1), F.jacobian(u), F.gradient(u))
        except (linalg.LinAlgError, ValueError):
            logger.debug("newton: singular Jacobian")
            break
        if not np.all(np.isfinite(du)):
            break
        damping = 1.0
        accepted = False
        while damping >= config.min_damping:
            trial = u - damping * du
            trial_res = F.residual_norm(trial)
            if math.isfinite(trial_res) and trial_res <= (1.0 - config.armijo * damping) * res:
                u, res, accepted = trial, trial_res, True
                break
            damping *= 0.5
        if not accepted:
            break
        done += 1
        logger.debug("newton %d: residual=%.3g damping=%.3g", done, res, damping)
    return u, done


def _append_decreasing(history: list[float], values) -> None:
    for value in values:
        if value <= history[-1]:
            history.append(value)


def minimize(initial: DiscreteRadialField, pot: PotentialField, params: ProblemParams,
             config: SolverConfig = SolverConfig()) -> SolverResult:
    """Projected descent from Phi(initial), then Newton polish.

    Every round starts with a search over dilations u(r/t) of the current
    iterate, which moves a concentrated seed along the nearly flat scale
    direction in one step, continues with projected Sobolev-gradient descent
    and ends with Newton once the energy has settled. The descent steps of all
    rounds share the max_iter budget. Newton iterates are kept only while
    their projection does not raise the energy.

    params selects the thresholds D*, 2D* used for classification.
    """
    F = _functional(initial.grid, pot)
    coercive = coercivity_check(initial.grid, pot) > 0.0
    if not coercive:
        logger.warning("quadratic form is not coercive on constants: the Nehari infimum is 0")

    u = F.project(np.asarray(initial.values))
    energy = F.energy(u)
    history = [energy]
    iterations = newton_done = 0
    diagnostic = None
    for _ in range(config.rounds):
        try:
            u, energy, _shift = _dilation_search(F, u, config)
            _append_decreasing(history, [energy])
            u, taken, steps, diagnostic = _descent(F, u, config, config.max_iter - iterations)
        except NehariProjectionError as exc:
            diagnostic = f"projection failed: {exc}"
            break
        iterations += taken
        _append_decreasing(history, steps[1:])
        energy = F.energy(u)
        if F.residual_norm(u) <= config.residual_tol:
            break
        polished, done = _newton(F, u, config)
        if not done:
            if iterations >= config.max_iter:
                break
            continue
        try:
            landed = F.energy(F.project(polished))
        except NehariProjectionError:
            landed = math.inf
        if not landed <= energy + config.energy_tol * abs(energy):
            diagnostic = "newton left the descent basin"
            logger.debug("newton rejected: projected J=%.15g above %.15g", landed, energy)
            if iterations >= config.max_iter:
                break
            continue
        newton_done += done
        if F.residual_norm(polished) <= config.residual_tol or iterations >= config.max_iter:
            u = polished
            diagnostic = None
            break
        u = F.project(polished)
        _append_decreasing(history, [F.energy(u)])
    if u.sum() < 0.0:
        u = -u

    comps = F.components(u)
    residual = F.residual_norm(u)
    label, flag = classify(comps.total, params)
    if residual > config.residual_tol and diagnostic is None:
        diagnostic = f"residual {residual:.3g} above {config.residual_tol:.3g}"
    result = SolverResult(
        minimizer=initial.grid.from_values(u),
        energy=comps.total,
        components=comps,
        residual_norm=residual,
        iterations=iterations,
        newton_iterations=newton_done,
        classification=label,
        boundary_flag=flag,
        coercive=coercive,
        history=tuple(history),
        diagnostic=diagnostic,
    )
    logger.info("minimize: J=%.12g residual=%.3g iterations=%d+%d class=%s",
                result.energy, result.residual_norm, iterations, newton_done, label.value)
    return result


def relative_spread(results: list[SolverResult]) -> float:
    """(max J - min J) / |min J| over a multistart."""
    energies = [r.energy for r in results]
    low = min(energies)
    return (max(energies) - low) / abs(low) if low else math.inf


def _minimize_task(seed: DiscreteRadialField, pot, params, config) -> SolverResult:
    return minimize(seed, pot, params, config)


def multistart(seeds: list[DiscreteRadialField], pot: PotentialField, params: ProblemParams,
               config: SolverConfig = SolverConfig(), workers: int = 1):
    """Minimise from every seed; returns (best result, all results in seed order)."""
    if not seeds:
        raise ParameterError("multistart needs at least one seed")
    task = functools.partial(_minimize_task, pot=pot, params=params, config=config)
    results = ordered_map(task, seeds, workers)
    best = min(results, key=lambda r: r.energy)
    spread = relative_spread(results)
    logger.info("multistart: %d seeds, best J=%.12g, relative spread %.3g",
                len(results), best.energy, spread)
    if spread > config.agreement_tol:
        logger.warning("multistart energies disagree: relative spread %.3g above %.3g",
                       spread, config.agreement_tol)
    return best, results

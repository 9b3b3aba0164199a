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
Synthetic bubble decomposition of Palais-Smale-like sequences.

Sequences v_m = u + sum_i B_i(m) are assembled from a background u and glued
bubbles

    B(x) = s^((2-n)/2) eta_r(dist(x, c)) U(dist(x, c) / s)

centred at the pole (singular profiles) or at a point c of one fixed
meridian (standard profiles). Every piece is radial about its own centre and
lives on the same radial grid in its own geodesic chart; a ChartedField
carries the pole part plus the off-pole pieces. Cross terms between a pole
part and an off-pole piece are integrated in the off-pole chart with
Gauss-Gegenbauer nodes in the angle to the pole, using

    cos(rho/R) = cos(c/R) cos(tau/R) + sin(c/R) sin(tau/R) cos(theta).

Ball energies about arbitrary centres of the meridian use the exact fraction
of a geodesic sphere lying inside a geodesic ball, a regularised incomplete
beta function.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special

from hslab.bubbles import BubbleKind, BubbleProfile
from hslab.bubbles import evaluate as bubble_evaluate
from hslab.constants import ProblemParams, compute_constants, threshold_beta_star, unit_sphere_area
from hslab.errors import ParameterError
from hslab.grid import DiscreteRadialField, RadialGrid
from hslab.manifold import PotentialField, cutoff, potential
from hslab.solver import EnergyComponents, discrete_energy
from hslab.workers import ordered_map

__all__ = [
    "GlueSpec",
    "ChartedField",
    "Concentration",
    "Extraction",
    "DecompositionRow",
    "DecompositionReport",
    "NoBubbleReason",
    "glue_bubble",
    "build_sequence",
    "charted_energy",
    "ball_energy",
    "detect_concentration",
    "extract_and_compare",
    "brezis_lieb_check",
    "default_gamma",
    "default_scales",
    "remainder_trend",
    "decompose",
]

logger = logging.getLogger(__name__)

DEFAULT_ANGLES = 48
NO_BUBBLE_MISMATCH = 0.5
ENERGY_MARGIN = 0.01
_CENTER_SCAN = 128
_MATCH_BALL = 8.0
# glued bubbles scale as s^((2-n)/2); the (2-n)/n form is reported, not used
SCALING_EXPONENT = "(2-n)/2"
SCALING_EXPONENT_ALTERNATIVE = "(2-n)/n"


class NoBubbleReason(str, enum.Enum):
    BELOW_THRESHOLD = "energy below beta*"
    NOT_CONCENTRATED = "no concentration"
    DEGENERATE = "degenerate local energy"
    PROFILE_MISMATCH = "profile mismatch"


# ----- Glue specs and fields -----

@dataclass(frozen=True)
class GlueSpec:
    """One glued bubble. center = 0 is the pole, center > 0 a point at that geodesic distance."""

    kind: BubbleKind
    scale: float
    cutoff_radius: float
    center: float = 0.0
    scale_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BubbleKind(self.kind))
        if not self.scale > 0.0:
            raise ParameterError(f"bubble scale must be positive, got {self.scale!r}")
        if not self.cutoff_radius > 0.0:
            raise ParameterError(f"cutoff radius must be positive, got {self.cutoff_radius!r}")
        if self.center < 0.0:
            raise ParameterError(f"center distance must be nonnegative, got {self.center!r}")
        if self.kind is BubbleKind.SINGULAR and self.center != 0.0:
            raise ParameterError("singular bubbles live at the pole (center = 0)")
        if self.kind is BubbleKind.STANDARD and self.center == 0.0:
            raise ParameterError("standard bubbles need an off-pole center (center > 0)")
        if not self.scale < self.cutoff_radius / 10.0:
            raise ParameterError(
                f"gluing regime needs scale < cutoff_radius/10 ({self.scale!r} vs {self.cutoff_radius!r})"
            )

    @property
    def at_pole(self) -> bool:
        return self.center == 0.0

    def at_scale(self, base: float) -> "GlueSpec":
        return replace(self, scale=base ** self.scale_power)

    def check_model(self, grid: RadialGrid) -> None:
        top = grid.model.injectivity_radius
        if not 2.0 * self.cutoff_radius < top / 2.0:
            raise ParameterError(f"cutoff radius {self.cutoff_radius!r} must be below pi R / 4")
        if not self.at_pole:
            support = 2.0 * self.cutoff_radius
            if not (support < self.center and self.center + support < top):
                raise ParameterError(
                    f"off-pole support [{self.center - support:.6g}, {self.center + support:.6g}] "
                    "must avoid the pole and the antipode"
                )


@dataclass(frozen=True, eq=False)
class ChartedField:
    """Pole-radial part plus off-pole pieces radial about (center, values) on one meridian."""

    pole: DiscreteRadialField
    offpole: tuple = ()
    supports: tuple = ()

    @property
    def grid(self) -> RadialGrid:
        return self.pole.grid

    def __add__(self, other: "ChartedField") -> "ChartedField":
        if other.grid is not self.grid:
            raise ParameterError("fields live on different grids")
        supports = self.supports + other.supports
        for i, (c1, w1) in enumerate(supports):
            for c2, w2 in supports[i + 1:]:
                if abs(c1 - c2) < w1 + w2:
                    raise ParameterError("off-pole supports overlap")
        return ChartedField(self.pole + other.pole, self.offpole + other.offpole, supports)

    def components(self) -> list[tuple[float, np.ndarray]]:
        return [(0.0, self.pole.values)] + [(c, f.values) for c, f in self.offpole]


def _bubble_params(spec: GlueSpec, pot: PotentialField) -> ProblemParams:
    if spec.kind is BubbleKind.STANDARD:
        return ProblemParams(pot.n, 0.0)
    return ProblemParams(pot.n, pot.h0)


def _profile_for(kind: BubbleKind, pot: PotentialField, scale: float) -> BubbleProfile:
    if kind is BubbleKind.STANDARD or pot.h0 == 0.0:
        return BubbleProfile(ProblemParams(pot.n, 0.0), scale, BubbleKind.STANDARD)
    return BubbleProfile(ProblemParams(pot.n, pot.h0), scale, BubbleKind.SINGULAR)


def glue_bubble(spec: GlueSpec, grid: RadialGrid, pot: PotentialField) -> ChartedField:
    """The glued bubble of spec as a charted field on grid."""
    spec.check_model(grid)
    profile = _profile_for(spec.kind, pot, spec.scale)
    tau = grid.nodes
    values = grid.from_values(cutoff(spec.cutoff_radius, tau) * bubble_evaluate(profile, tau))
    if spec.at_pole:
        return ChartedField(values)
    return ChartedField(grid.zeros(), ((spec.center, values),),
                        ((spec.center, 2.0 * spec.cutoff_radius),))


def default_scales(first: int = 5, last: int = 12) -> list[float]:
    return [2.0 ** (-m) for m in range(first, last + 1)]


def build_sequence(background: DiscreteRadialField | None, specs, scales, grid: RadialGrid,
                   pot: PotentialField) -> list[ChartedField]:
    """v_m = background + sum of glued bubbles at base scale scales[m].

    Bubble i uses scale scales[m] ** specs[i].scale_power.
    """
    specs = list(specs)
    if not specs and background is None:
        raise ParameterError("nothing to build: no background and no bubbles")
    for i, s1 in enumerate(specs):
        for s2 in specs[i + 1:]:
            if s1.center == s2.center and s1.scale_power == s2.scale_power:
                raise ParameterError("two bubbles share center and scale")
    base = ChartedField(background if background is not None else grid.zeros())
    sequence = []
    for sigma in scales:
        v = base
        for spec in specs:
            v = v + glue_bubble(spec.at_scale(sigma), grid, pot)
        sequence.append(v)
    return sequence


# ----- Energies -----

@functools.lru_cache(maxsize=8)
def _angular_rule(n: int, count: int):
    x, g = special.roots_gegenbauer(count, (n - 2) / 2.0)
    return x, g * unit_sphere_area(n - 2) / unit_sphere_area(n - 1)


def _chart_terms(grid: RadialGrid, pot: PotentialField, u: np.ndarray, center: float,
                 b: np.ndarray, n_angles: int):
    """Cross and correction integrals of the pole field u with the piece b about center."""
    model = grid.model
    R = model.radius
    p = 2.0 * model.n / (model.n - 2)
    active = np.nonzero(b)[0]
    if active.size == 0:
        return 0.0, 0.0, 0.0
    tau = grid.nodes[active]
    mass = grid.mass[active]
    bi = b[active]
    db = np.gradient(b, grid.nodes)[active]
    x, weights = _angular_rule(model.n, n_angles)

    c0, s0 = math.cos(center / R), math.sin(center / R)
    cos_rho = np.clip(c0 * np.cos(tau / R)[:, None] + s0 * np.sin(tau / R)[:, None] * x[None, :],
                      -1.0, 1.0)
    rho = R * np.arccos(cos_rho)
    rho_tau = (c0 * np.sin(tau / R)[:, None] - s0 * np.cos(tau / R)[:, None] * x[None, :]) \
        / np.sin(rho / R)
    u_rho = np.interp(rho, grid.nodes, u)
    du_rho = np.interp(rho, grid.nodes, np.gradient(u, grid.nodes))
    h_rho = potential(model, pot, rho) / (rho * rho)

    grad_cross = 2.0 * mass @ ((db[:, None] * du_rho * rho_tau) @ weights)
    hardy = mass @ ((h_rho * (2.0 * u_rho * bi[:, None] + bi[:, None] ** 2)) @ weights)
    crit = mass @ ((np.abs(u_rho + bi[:, None]) ** p - np.abs(u_rho) ** p) @ weights)
    return float(grad_cross), float(hardy), float(crit)


def charted_energy(v: ChartedField, pot: PotentialField,
                   n_angles: int = DEFAULT_ANGLES) -> EnergyComponents:
    """J_h of a charted field with its three integrals."""
    grid = v.grid
    base = discrete_energy(v.pole, pot)
    grad, hardy, crit = base.gradient, base.hardy, base.critical
    u = v.pole.values
    for center, piece in v.offpole:
        b = piece.values
        grad += float(grid.stiffness @ np.diff(b) ** 2)
        g_x, h_b, c_b = _chart_terms(grid, pot, u, center, b, n_angles)
        grad += g_x
        hardy += h_b
        crit += c_b
    p = 2.0 * grid.model.n / (grid.model.n - 2)
    return EnergyComponents(grad, hardy, crit, 0.5 * grad - 0.5 * hardy - crit / p)


def _critical_integral(v: ChartedField, n_angles: int) -> float:
    grid = v.grid
    p = 2.0 * grid.model.n / (grid.model.n - 2)
    total = float(grid.mass @ np.abs(v.pole.values) ** p)
    for center, piece in v.offpole:
        zero = PotentialField(grid.model.n, 0.0)
        total += _chart_terms(grid, zero, v.pole.values, center, piece.values, n_angles)[2]
    return total


# ----- Concentration -----

def _cap_fraction(n: int, R: float, d: float, tau: np.ndarray, t: float) -> np.ndarray:
    """Fraction of the geodesic sphere S(c, tau) inside the ball B(x, t), dist(c, x) = d."""
    denom = math.sin(d / R) * np.sin(tau / R)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = (math.cos(t / R) - math.cos(d / R) * np.cos(tau / R)) / denom
    xc = np.where(denom > 0.0, xc, np.where(tau <= t, -1.0, 1.0))
    xc = np.clip(xc, -1.0, 1.0)
    half = (n - 1) / 2.0
    return special.betainc(half, half, (1.0 - xc) / 2.0)


@dataclass(frozen=True)
class _EnergyShells:
    center: float
    mid: np.ndarray
    right: np.ndarray
    energy: np.ndarray
    cumulative: np.ndarray


def _shells(grid: RadialGrid, center: float, values: np.ndarray) -> _EnergyShells:
    e = grid.stiffness * np.diff(values) ** 2
    keep = e > 1e-16 * max(float(e.sum()), 1e-300)
    mid = 0.5 * (grid.nodes[:-1] + grid.nodes[1:])
    right = grid.nodes[1:]
    return _EnergyShells(center, mid[keep], right, e[keep], np.cumsum(e))


def _field_shells(v: ChartedField) -> list[_EnergyShells]:
    return [_shells(v.grid, c, vals) for c, vals in v.components() if np.any(vals)]


def _ball(shells: list[_EnergyShells], grid: RadialGrid, s: float, t: float) -> float:
    n, R = grid.model.n, grid.model.radius
    total = 0.0
    for sh in shells:
        d = abs(s - sh.center)
        if d < 1e-14:
            total += float(np.interp(t, np.concatenate(([0.0], sh.right)),
                                     np.concatenate(([0.0], sh.cumulative))))
        else:
            total += float(sh.energy @ _cap_fraction(n, R, d, sh.mid, t))
    return total


def ball_energy(v: ChartedField, center: float, radius: float) -> float:
    """int over B(center, radius) of |grad v|^2, center measured along the meridian."""
    return _ball(_field_shells(v), v.grid, center, radius)


def _capture_radius(shells, grid: RadialGrid, s: float, gamma: float) -> float:
    top = grid.model.injectivity_radius
    lo = grid.nodes[0] * 1e-3
    if _ball(shells, grid, s, lo) >= gamma:
        return lo
    return optimize.brentq(lambda t: _ball(shells, grid, s, t) - gamma, lo, top,
                           xtol=1e-12, rtol=1e-10)


@dataclass(frozen=True)
class Concentration:
    radius: float
    center: float
    pole_radius: float
    method: str

    def as_dict(self) -> dict:
        return {"radius": self.radius, "center": self.center,
                "pole_radius": self.pole_radius, "method": self.method}


def detect_concentration(v: ChartedField, gamma: float) -> Concentration:
    """Smallest ball capturing gamma of gradient energy, about the pole or an off-pole centre.

    The pole radius is always computed. Centres along the meridian are then
    scanned through the concentration function; an off-pole centre wins if
    its capture radius is below half the pole radius and its ball avoids
    the pole.
    """
    grid = v.grid
    shells = _field_shells(v)
    total = sum(float(sh.energy.sum()) for sh in shells)
    if not 0.0 < gamma < total:
        raise ParameterError(f"gamma = {gamma!r} must lie in (0, total gradient energy {total:.6g})")
    pole_r = _capture_radius(shells, grid, 0.0, gamma)

    top = grid.model.injectivity_radius
    centres = np.linspace(0.0, top, _CENTER_SCAN + 2)[1:-1]
    radii = np.array([_capture_radius(shells, grid, s, gamma) for s in centres])
    best = int(np.argmin(radii))
    lo = centres[max(best - 1, 0)]
    hi = centres[min(best + 1, centres.size - 1)]
    res = optimize.minimize_scalar(lambda s: _capture_radius(shells, grid, s, gamma),
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-6 * grid.model.radius})
    s_best, r_best = float(res.x), float(res.fun)
    if r_best > radii[best]:
        s_best, r_best = float(centres[best]), float(radii[best])

    if r_best < 0.5 * pole_r and s_best > r_best:
        logger.debug("concentration off the pole at %.6g, radius %.6g (pole radius %.6g)",
                     s_best, r_best, pole_r)
        return Concentration(r_best, s_best, pole_r, "offpole")
    return Concentration(pole_r, 0.0, pole_r, "pole")


# ----- Extraction -----

@dataclass(frozen=True)
class Extraction:
    recovered_scale: float | None
    profile_mismatch: float | None
    kind: BubbleKind | None
    no_bubble: str | None = None

    @property
    def found(self) -> bool:
        return self.no_bubble is None

    def as_dict(self) -> dict:
        return {
            "recovered_scale": self.recovered_scale,
            "profile_mismatch": self.profile_mismatch,
            "kind": None if self.kind is None else self.kind.value,
            "no_bubble": self.no_bubble,
        }


def _gradient_mismatch(grid: RadialGrid, values: np.ndarray, profile_of, radius: float):
    cells = grid.nodes[1:] <= radius
    c = grid.stiffness[cells]
    norm = math.sqrt(float(c @ np.diff(values)[cells] ** 2))
    if norm == 0.0:
        return None

    def mismatch(log_s):
        diff = np.diff(values - bubble_evaluate(profile_of(math.exp(log_s)), grid.nodes))[cells]
        return math.sqrt(float(c @ diff ** 2)) / norm

    return mismatch


def extract_and_compare(v: ChartedField, conc: Concentration, pot: PotentialField,
                        gamma: float | None = None,
                        concentration_limit: float | None = None) -> Extraction:
    """Fit a bubble profile to the concentrating piece; returns scale and mismatch.

    The mismatch is the gradient L2 distance on B(centre, 8 r_m), relative to
    the field, minimised over the bubble scale.
    """
    grid = v.grid
    limit = grid.model.injectivity_radius / 50.0 if concentration_limit is None else concentration_limit
    if conc.radius > limit:
        return Extraction(None, None, None, NoBubbleReason.NOT_CONCENTRATED.value)

    if conc.method == "pole":
        values = v.pole.values
        kind = BubbleKind.SINGULAR if pot.h0 > 0.0 else BubbleKind.STANDARD
    else:
        if not v.offpole:
            return Extraction(None, None, None, NoBubbleReason.DEGENERATE.value)
        _, piece = min(v.offpole, key=lambda cp: abs(cp[0] - conc.center))
        values = piece.values
        kind = BubbleKind.STANDARD

    radius = _MATCH_BALL * conc.radius
    if gamma is not None:
        local = ball_energy(ChartedField(grid.from_values(values)), 0.0, radius)
        if local < 0.5 * gamma:
            return Extraction(None, None, kind, NoBubbleReason.DEGENERATE.value)
    profile_of = functools.partial(_profile_for, kind, pot)
    mismatch = _gradient_mismatch(grid, values, profile_of, radius)
    if mismatch is None:
        return Extraction(None, None, kind, NoBubbleReason.DEGENERATE.value)

    base = math.log(conc.radius)
    scan = np.linspace(base - math.log(64.0), base + math.log(64.0), 41)
    scores = [mismatch(x) for x in scan]
    best = int(np.argmin(scores))
    lo, hi = scan[max(best - 1, 0)], scan[min(best + 1, scan.size - 1)]
    res = optimize.minimize_scalar(mismatch, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-6})
    log_s, score = (float(res.x), float(res.fun)) if res.fun <= scores[best] else (scan[best], scores[best])
    if score > NO_BUBBLE_MISMATCH:
        return Extraction(math.exp(log_s), score, kind, NoBubbleReason.PROFILE_MISMATCH.value)
    return Extraction(math.exp(log_s), score, kind)


# ----- Brezis-Lieb -----

def brezis_lieb_check(background: DiscreteRadialField | None, bubbles,
                      n_angles: int = DEFAULT_ANGLES) -> list[float]:
    """Delta_m = |int |u + b_m|^(2*) - |u|^(2*) - |b_m|^(2*)| along a bubble sequence."""
    defects = []
    for b in bubbles:
        b = b if isinstance(b, ChartedField) else ChartedField(b)
        if background is None or not np.any(background.values):
            defects.append(0.0)
            continue
        u = ChartedField(background)
        joint = _critical_integral(u + b, n_angles)
        defects.append(abs(joint - _critical_integral(u, n_angles) - _critical_integral(b, n_angles)))
    return defects


# ----- Report -----

def default_gamma(params: ProblemParams) -> float:
    """n beta* / 4, a fraction of the least gradient energy a bubble carries."""
    return params.n * threshold_beta_star(params) / 4.0


@dataclass(frozen=True)
class DecompositionRow:
    scale: float
    total_energy: float
    background_energy: float
    sum_bubble_energies: float
    interaction_energy: float
    remainder_energy_norm: float
    brezis_lieb_defect: float
    concentration: Concentration | None = None
    extraction: Extraction | None = None

    def csv_row(self) -> list[float]:
        return [self.scale, self.total_energy, self.background_energy, self.sum_bubble_energies,
                self.interaction_energy, self.remainder_energy_norm, self.brezis_lieb_defect]

    def as_dict(self) -> dict:
        return {
            "scale": self.scale,
            "total_energy": self.total_energy,
            "background_energy": self.background_energy,
            "sum_bubble_energies": self.sum_bubble_energies,
            "interaction_energy": self.interaction_energy,
            "remainder_energy_norm": self.remainder_energy_norm,
            "brezis_lieb_defect": self.brezis_lieb_defect,
            "concentration": None if self.concentration is None else self.concentration.as_dict(),
            "extraction": None if self.extraction is None else self.extraction.as_dict(),
        }


@dataclass(frozen=True)
class DecompositionReport:
    rows: tuple
    gamma: float
    beta_star: float
    remainder_decreasing: bool
    notes: tuple = field(default_factory=tuple)
    noise_floor: float = 0.0
    remainder_increases: tuple = ()

    def as_dict(self) -> dict:
        return {
            "rows": [r.as_dict() for r in self.rows],
            "gamma": self.gamma,
            "beta_star": self.beta_star,
            "remainder_decreasing": self.remainder_decreasing,
            "noise_floor": self.noise_floor,
            "remainder_increases": [
                {"from_scale": a, "to_scale": b, "increase": rise}
                for a, b, rise in self.remainder_increases
            ],
            "scaling_exponent": SCALING_EXPONENT,
            "scaling_exponent_alternative": SCALING_EXPONENT_ALTERNATIVE,
            "notes": list(self.notes),
        }


def _limit_energy(spec: GlueSpec, pot: PotentialField) -> float:
    return compute_constants(_bubble_params(spec, pot)).D_star


def _row_task(sigma: float, background, specs, grid, pot, gamma, n_angles, extract):
    v = build_sequence(background, specs, [sigma], grid, pot)[0]
    total = charted_energy(v, pot, n_angles).total
    bg = 0.0 if background is None else discrete_energy(background, pot).total
    glued = [glue_bubble(s.at_scale(sigma), grid, pot) for s in specs]
    individual = sum(charted_energy(b, pot, n_angles).total for b in glued)
    limits = sum(_limit_energy(s, pot) for s in specs)
    bubble_sum = None
    for b in glued:
        bubble_sum = b if bubble_sum is None else bubble_sum + b
    defect = brezis_lieb_check(background, [bubble_sum], n_angles)[0] if bubble_sum is not None else 0.0

    conc = ext = None
    if extract:
        params = ProblemParams(pot.n, pot.h0)
        beta_star = threshold_beta_star(params)
        total_grad = sum(float(sh.energy.sum()) for sh in _field_shells(v))
        if total < beta_star * (1.0 - ENERGY_MARGIN):
            ext = Extraction(None, None, None, NoBubbleReason.BELOW_THRESHOLD.value)
        elif gamma >= total_grad:
            ext = Extraction(None, None, None, NoBubbleReason.DEGENERATE.value)
        else:
            conc = detect_concentration(v, gamma)
            ext = extract_and_compare(v, conc, pot, gamma)
    return DecompositionRow(
        scale=sigma,
        total_energy=total,
        background_energy=bg,
        sum_bubble_energies=limits,
        interaction_energy=total - bg - individual,
        remainder_energy_norm=abs(total - bg - limits),
        brezis_lieb_defect=defect,
        concentration=conc,
        extraction=ext,
    )


def remainder_trend(remainders, noise_floor: float) -> tuple[bool, tuple]:
    """(within_floor, rises): every (index, increase) between consecutive remainders."""
    rises = tuple((i, b - a) for i, (a, b) in enumerate(zip(remainders, remainders[1:])) if b > a)
    return all(rise <= noise_floor for _, rise in rises), rises


def decompose(grid: RadialGrid, pot: PotentialField, specs, scales=None,
              background: DiscreteRadialField | None = None, gamma: float | None = None,
              n_angles: int = DEFAULT_ANGLES, extract: bool = True,
              workers: int = 1, floor: float = 1e-4) -> DecompositionReport:
    """Energy identity, Brezis-Lieb defect and extraction for every scale.

    remainder_decreasing tolerates increases up to the noise floor floor * D*;
    every increase is listed in remainder_increases and noted, so rises
    within the floor stay visible.
    """
    specs = list(specs)
    scales = default_scales() if scales is None else list(scales)
    params = ProblemParams(pot.n, pot.h0)
    gamma = default_gamma(params) if gamma is None else gamma
    task = functools.partial(_row_task, background=background, specs=specs, grid=grid, pot=pot,
                             gamma=gamma, n_angles=n_angles, extract=extract)
    rows = tuple(ordered_map(task, scales, workers))
    d_star = compute_constants(params).D_star
    rem = [r.remainder_energy_norm for r in rows]
    noise_floor = floor * d_star
    decreasing, rises = remainder_trend(rem, noise_floor)
    increases = tuple((rows[i].scale, rows[i + 1].scale, rise) for i, rise in rises)
    notes = []
    if not decreasing:
        notes.append("remainder energy does not decrease along the scale sequence")
        logger.warning("decomposition: remainder energy not decreasing: %s", rem)
    elif increases:
        notes.append(f"remainder rises {len(increases)} time(s), at most "
                     f"{max(r for _, _, r in increases):.3g}, within the noise floor {noise_floor:.3g}")
        logger.info("decomposition: %s", notes[-1])
    logger.info("decomposition: %d scales, final remainder %.3g (D*=%.6g)",
                len(rows), rem[-1] if rem else float("nan"), d_star)
    return DecompositionReport(rows, gamma, threshold_beta_star(params), decreasing, tuple(notes),
                               noise_floor, increases)

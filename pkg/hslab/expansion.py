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
Small-scale expansion of the projected energy of glued singular bubbles.

The test function is phi_eps = eta_delta(r) U_eps(r) on S^n(R). For every eps
the three integrals

    grad   int |phi'|^2 omega dr
    hardy  int h(r) phi^2 / r^2 omega dr
    crit   int |phi|^(2*) omega dr

are computed by radial quadrature in the stretched variable t = r / eps, in
which they are scale free; J_h(Phi(phi_eps)) follows from
solver.projected_energy. The eps^2 coefficients are then

  measured   by a least-squares fit on the smallest eps, with the limit
             Richardson-extrapolated,
  derived    from the exact density coefficient -(n-1)/(6R^2) and h2 applied
             to flat moments of U (moment_slopes),
  literal    from the closed-form coefficients C1, C2, C3, A, B.

Only the measured and derived values drive verdicts; the literal values are
reported next to them.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hslab.bubbles import BubbleKind, BubbleProfile, amplitude
from hslab.bubbles import energy as bubble_energy
from hslab.bubbles import evaluate as bubble_evaluate
from hslab.constants import ProblemParams, compute_constants
from hslab.errors import ParameterError
from hslab.grid import DiscreteRadialField, RadialGrid
from hslab.manifold import (PotentialField, SphereModel, cutoff, cutoff_derivative,
                            potential, volume_density)
from hslab.quadrature import (DEFAULT_REL_TOL, IntegralSpec, closed_form_I, compute_I,
                              integrate_radial_with_error)
from hslab.solver import projected_energy
from hslab.workers import ordered_map

__all__ = [
    "ExpansionCoefficients",
    "ExpansionPoint",
    "ExpansionReport",
    "ExpansionVerdict",
    "ExistenceVerdict",
    "MomentSlopes",
    "SeriesFit",
    "coefficients",
    "default_delta",
    "default_eps_grid",
    "energy_curve",
    "existence_conditions",
    "fit_expansion",
    "fit_series",
    "moment_slopes",
    "params_for",
    "richardson_table",
    "run_expansion",
    "seed_fields",
    "test_function",
]

logger = logging.getLogger(__name__)

DEFAULT_FIT_POINTS = 4
FIT_QUALITY_LIMIT = 0.1
# a remainder exponent closer than this to 2 is collinear with eps^2
_REMAINDER_SEPARATION = 1e-3
_SLOPE_FLAG = 0.02


class ExpansionVerdict(str, enum.Enum):
    BELOW_D_STAR = "below_D_star"
    INCONCLUSIVE = "inconclusive"


def params_for(pot: PotentialField) -> ProblemParams:
    """Limit-problem parameters at the pole: lambda = h(p)."""
    return ProblemParams(pot.n, pot.h0)


def default_delta(model: SphereModel) -> float:
    return model.injectivity_radius / 8.0


def default_eps_grid(delta: float, count: int = 7) -> list[float]:
    """eps_k = delta/10 * 2^-k, k = 0..count-1 (strictly decreasing)."""
    if count < 1:
        raise ParameterError(f"eps count must be positive, got {count}")
    return [delta / 10.0 * 2.0 ** (-k) for k in range(count)]


def _check_delta(model: SphereModel, delta: float) -> None:
    if not 0.0 < delta < model.injectivity_radius / 4.0:
        raise ParameterError(
            f"delta = {delta!r} must lie in (0, pi R / 4) = (0, {model.injectivity_radius / 4:.6g})"
        )


def _profile(params: ProblemParams, eps: float) -> BubbleProfile:
    kind = BubbleKind.STANDARD if params.lam == 0.0 else BubbleKind.SINGULAR
    return BubbleProfile(params, eps, kind)


# ----- Test functions -----

def test_function(grid: RadialGrid, params: ProblemParams, eps: float,
                  delta: float) -> DiscreteRadialField:
    """phi_eps = eta_delta U_eps sampled on the grid nodes."""
    _check_delta(grid.model, delta)
    if not 0.0 < eps < delta:
        raise ParameterError(f"eps = {eps!r} must lie in (0, delta = {delta!r})")
    profile = _profile(params, eps)
    r = grid.nodes
    return grid.from_values(cutoff(delta, r) * bubble_evaluate(profile, r))


def seed_fields(grid: RadialGrid, params: ProblemParams, delta: float,
                count: int = 5) -> list[DiscreteRadialField]:
    """Deterministic multistart seeds: test functions at eps = delta/10 * 2^-k."""
    return [test_function(grid, params, eps, delta) for eps in default_eps_grid(delta, count)]


# ----- Continuous energy curve -----

@dataclass(frozen=True)
class ExpansionPoint:
    eps: float
    grad: float
    hardy: float
    crit: float
    energy: float
    abs_error: float

    def as_dict(self) -> dict[str, float]:
        return {"eps": self.eps, "grad_integral": self.grad, "hardy_integral": self.hardy,
                "crit_integral": self.crit, "energy": self.energy, "abs_error": self.abs_error}


def _curve_point(eps: float, model: SphereModel, pot: PotentialField, delta: float,
                 rel_tol: float) -> ExpansionPoint:
    params = params_for(pot)
    n, a, k = params.n, params.a, params.k
    c2 = amplitude(n, a) ** 2
    crit_exp = params.critical_exponent
    c_crit = amplitude(n, a) ** crit_exp
    w = model.omega
    p_quad = a * (n - 2.0) - 1.0
    p_crit = a * n - 1.0
    top = 2.0 * delta / eps

    def parts(t):
        r = eps * t
        d = 1.0 + t ** (2.0 * a)
        q = (a - 1.0) - 2.0 * a * (d - 1.0) / d
        return r, d, q, cutoff(delta, r), w * volume_density(model, r)

    def grad(t):
        r, d, q, eta, dens = parts(t)
        return c2 * d ** (-(n - 2.0)) * (eta * k * q + r * cutoff_derivative(delta, r)) ** 2 * dens

    def hardy(t):
        r, d, _, eta, dens = parts(t)
        return c2 * d ** (-(n - 2.0)) * eta * eta * potential(model, pot, r) * dens

    def crit(t):
        r, d, _, eta, dens = parts(t)
        return c_crit * d ** (-float(n)) * eta ** crit_exp * dens

    brk = [delta / eps]
    brk += [10.0 ** j for j in range(1, int(math.log10(top)) + 1) if 10.0 ** j < top]
    g, e_g = integrate_radial_with_error(grad, 0.0, top, rel_tol, brk, endpoint_power=p_quad)
    h, e_h = integrate_radial_with_error(hardy, 0.0, top, rel_tol, brk, endpoint_power=p_quad)
    c, e_c = integrate_radial_with_error(crit, 0.0, top, rel_tol, brk, endpoint_power=p_crit)
    energy = projected_energy(g - h, c, n)
    # first-order propagation of the three quadrature errors
    err = energy * ((n / 2.0) * (e_g + e_h) / (g - h) + ((n - 2.0) / 2.0) * e_c / c)
    logger.debug("eps=%.4g grad=%.12g hardy=%.12g crit=%.12g J=%.12g", eps, g, h, c, energy)
    return ExpansionPoint(eps, g, h, c, energy, err)


def energy_curve(model: SphereModel, pot: PotentialField, eps_grid, delta: float | None = None,
                 rel_tol: float = DEFAULT_REL_TOL, workers: int = 1) -> list[ExpansionPoint]:
    """Component integrals and J_h(Phi(phi_eps)) for every eps in eps_grid."""
    delta = default_delta(model) if delta is None else delta
    _check_delta(model, delta)
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid:
        raise ParameterError("eps grid is empty")
    if any(not 0.0 < e <= delta / 10.0 for e in eps_grid):
        raise ParameterError(f"every eps must lie in (0, delta/10 = {delta / 10.0:.6g}]")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ParameterError("eps grid must be strictly decreasing")
    task = functools.partial(_curve_point, model=model, pot=pot, delta=delta, rel_tol=rel_tol)
    return ordered_map(task, eps_grid, workers)


# ----- Fitting -----

def richardson_table(values, p: float = 2.0, r: float = 2.0) -> list[list[float]]:
    """Richardson tableau for samples ordered coarse to fine with step ratio r.

    Level j removes the eps^(p j) term with factor r^(p j).
    """
    levels = [list(map(float, values))]
    for j in range(1, len(values)):
        mult = r ** (p * j)
        prev = levels[-1]
        levels.append([(mult * prev[i + 1] - prev[i]) / (mult - 1.0) for i in range(len(prev) - 1)])
    return levels


@dataclass(frozen=True)
class SeriesFit:
    limit: float
    slope: float
    remainder: float | None
    rms_residual: float
    quality: float
    extrapolated: float
    extrapolation_error: float

    def as_dict(self) -> dict:
        return {
            "limit": self.limit,
            "slope": self.slope,
            "remainder_coefficient": self.remainder,
            "rms_residual": self.rms_residual,
            "fit_quality": self.quality,
            "extrapolated_limit": {"value": self.extrapolated, "error": self.extrapolation_error},
        }


def fit_series(eps, values, fit_points: int = DEFAULT_FIT_POINTS,
               remainder_exponent: float | None = None) -> SeriesFit:
    """Least squares of v = L + S eps^2 (+ T eps^remainder) on the smallest eps.

    The remainder column is used whenever its exponent differs from 2 by at
    least 1e-3 and there are more points than unknowns.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if fit_points < 2 or eps.size < fit_points:
        raise ParameterError(f"fit needs at least {max(fit_points, 2)} points, got {eps.size}")
    x = eps[-fit_points:]
    y = values[-fit_points:]
    columns = [np.ones_like(x), x ** 2]
    use_remainder = (remainder_exponent is not None
                     and abs(remainder_exponent - 2.0) >= _REMAINDER_SEPARATION
                     and fit_points > 3)
    if use_remainder:
        columns.append(x ** remainder_exponent)
    basis = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    rms = float(np.sqrt(np.mean((basis @ coef - y) ** 2)))
    slope = float(coef[1])
    span = float(x.max() ** 2 - x.min() ** 2)
    quality = rms / (abs(slope) * span) if slope != 0.0 and span > 0.0 else math.inf

    table = richardson_table(y)
    extrapolated = table[-1][0]
    extrapolation_error = abs(table[-1][0] - table[-2][-1]) if len(table) > 1 else math.inf
    return SeriesFit(float(coef[0]), slope, float(coef[2]) if use_remainder else None,
                     rms, quality, float(extrapolated), float(extrapolation_error))


# ----- Coefficients -----

@dataclass(frozen=True)
class ExpansionCoefficients:
    c_na: float
    c1: float
    c1_derivation: float
    c2: float
    c3: float
    a_na: float
    a_na_derivation: float
    b_na: float
    i_ref: float
    i_ref_closed_form: float
    crit_integral: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _dimension_ok(params: ProblemParams) -> bool:
    return params.n > 2.0 + 2.0 / params.a


def coefficients(params: ProblemParams, rel_tol: float = DEFAULT_REL_TOL) -> ExpansionCoefficients:
    """Closed-form expansion constants C(n,a), C1..C3, A(n,a), B(n,a).

    C1 is given with the boxed bracket term 2(1-a) and, as c1_derivation,
    with 2(1-a^2), the form the recurrences produce.
    """
    if not _dimension_ok(params):
        raise ParameterError(
            f"dimension bound n > 2 + 2/a violated: n={params.n}, 2 + 2/a = {2 + 2 / params.a:.6g}"
        )
    n, a, k = params.n, params.a, params.k
    w = compute_constants(params).omega
    c = amplitude(n, a)
    an, am = a * n, a * (n - 2.0)
    head = (a - 1.0) ** 2
    tail = (1.0 + a) ** 2 * (an + 2.0) * (am + 2.0) / ((an - 2.0) * (am - 2.0))
    mid_boxed = 2.0 * (1.0 - a) * (am + 2.0) / (an - 2.0)
    mid_derived = 2.0 * (1.0 - a * a) * (am + 2.0) / (an - 2.0)
    pref = c * c * k * k * w / 6.0
    c1 = pref * (head + mid_boxed + tail)
    c1_derivation = pref * (head + mid_derived + tail)
    c2 = c * c * 4.0 * a * a * w * (n - 2.0) * (n - 1.0) / ((am - 2.0) * (an - 2.0))
    c3 = c ** params.critical_exponent * w * (am + 2.0) * n / (6.0 * (an - 2.0))
    spec = IntegralSpec(am + 1.0, float(n), a)
    i_ref = compute_I(spec, rel_tol)
    crit = bubble_energy(_profile(params, 1.0), rel_tol=rel_tol).critical
    return ExpansionCoefficients(
        c_na=c,
        c1=c1,
        c1_derivation=c1_derivation,
        c2=c2,
        c3=c3,
        a_na=6.0 * ((n - 2.0) / n * c3 - c1) / c2,
        a_na_derivation=6.0 * ((n - 2.0) / n * c3 - c1_derivation) / c2,
        b_na=n / (12.0 * c2 * crit ** (n / 2.0)),
        i_ref=i_ref,
        i_ref_closed_form=closed_form_I(spec),
        crit_integral=crit,
    )


@dataclass(frozen=True)
class MomentSlopes:
    """eps^2 coefficients of the three integrals and of the projected energy."""

    grad: float
    hardy: float
    crit: float
    energy: float
    grad0: float
    hardy0: float
    crit0: float
    energy0: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def moment_slopes(model: SphereModel, pot: PotentialField,
                  rel_tol: float = DEFAULT_REL_TOL) -> MomentSlopes:
    """Derived eps^2 slopes from flat moments of U.

    With c = -(n-1)/(6R^2), the density coefficient:
      grad  : c w int |U'|^2 t^(n+1)
      hardy : (c h0 + h2) w int U^2 t^(n-1)
      crit  : c w int U^(2*) t^(n+1)
    The h2 term assumes delta_cap beyond the support of phi_eps.
    """
    params = params_for(pot)
    if not _dimension_ok(params):
        raise ParameterError(
            f"moments diverge unless n > 2 + 2/a (n={params.n}, a={params.a:.6g})"
        )
    n, a, k = params.n, params.a, params.k
    w = model.omega
    c2 = amplitude(n, a) ** 2
    c_crit = amplitude(n, a) ** params.critical_exponent
    p_quad = a * (n - 2.0) - 1.0
    p_crit = a * n - 1.0

    def q(t):
        d = 1.0 + t ** (2.0 * a)
        return (a - 1.0) - 2.0 * a * (d - 1.0) / d

    def quad_factor(t):
        return c2 * (1.0 + t ** (2.0 * a)) ** (-(n - 2.0))

    def crit_factor(t):
        return c_crit * (1.0 + t ** (2.0 * a)) ** (-float(n))

    def moment(f, power):
        return w * integrate_radial_with_error(f, rel_tol=rel_tol, endpoint_power=power)[0]

    grad_factor = lambda t: k * k * q(t) ** 2 * quad_factor(t)  # noqa: E731
    g0, g2 = moment(grad_factor, p_quad), moment(grad_factor, p_quad + 2.0)
    h0m, h2m = moment(quad_factor, p_quad), moment(quad_factor, p_quad + 2.0)
    c0, c2m = moment(crit_factor, p_crit), moment(crit_factor, p_crit + 2.0)

    dens = model.density_coefficient
    s_grad = dens * g2
    s_hardy = (dens * pot.h0 + pot.h2) * h2m
    s_crit = dens * c2m
    num0 = g0 - pot.h0 * h0m
    j0 = projected_energy(num0, c0, n)
    s_energy = j0 * ((n / 2.0) * (s_grad - s_hardy) / num0 - ((n - 2.0) / 2.0) * s_crit / c0)
    return MomentSlopes(s_grad, s_hardy, s_crit, s_energy, g0, pot.h0 * h0m, c0, j0)


# ----- Existence conditions -----

@dataclass(frozen=True)
class ExistenceVerdict:
    dimension_ok: bool
    h_positive: bool
    hardy_ok: bool
    second_window: bool
    theorem_condition: dict = field(default_factory=dict)
    lemma_condition: dict = field(default_factory=dict)
    first_regime: bool = False
    second_regime: bool = False
    mu_condition: str = "not evaluated"
    regime: str = "none"
    literal_regime: str = "none"
    measured_regime: str = "not measured"
    decided_by: str = "literal condition (advisory)"
    diagnostics: tuple = ()

    def as_dict(self) -> dict:
        return {
            "dimension_ok": self.dimension_ok,
            "h_positive": self.h_positive,
            "hardy_ok": self.hardy_ok,
            "second_window": self.second_window,
            "theorem_condition": self.theorem_condition,
            "lemma_condition": self.lemma_condition,
            "first_regime": self.first_regime,
            "second_regime": self.second_regime,
            "mu_condition": self.mu_condition,
            "regime": self.regime,
            "literal_regime": self.literal_regime,
            "measured_regime": self.measured_regime,
            "decided_by": self.decided_by,
            "diagnostics": list(self.diagnostics),
        }


def existence_conditions(model: SphereModel, pot: PotentialField,
                         solver_energy: float | None = None) -> ExistenceVerdict:
    """Evaluate the existence hypotheses; never raises on out-of-range inputs.

    Conditions are given as {"laplacian_minus_div_grad": v, "laplacian_div_grad": v}
    for both sign conventions of Delta h(p); literal_regime uses the first
    (Delta = -div grad). solver_energy, when given, is an upper bound for the
    Nehari infimum: it decides regime through its energy window, can only
    refute mu^(n/2) > n D*, and leaves the literal conditions advisory.
    """
    n = pot.n
    diagnostics = []
    k_h2 = (2.0 / (n - 2)) ** 2
    defect = 1.0 - pot.h0 * k_h2
    h_positive = pot.h0 > 0.0
    hardy_ok = defect > 0.0
    if pot.h0 == 0.0:
        diagnostics.append("h(p) = 0 forces a = 1: the singular windows degenerate")
    second_window = hardy_ok and 0.0 < defect ** ((n - 1) / 2.0) < 0.5

    theorem, lemma = {}, {}
    dimension_ok = False
    if hardy_ok and pot.h0 >= 0.0:
        params = params_for(pot)
        dimension_ok = _dimension_ok(params)
        if dimension_ok:
            coef = coefficients(params)
            base = (coef.a_na + pot.h0) * model.scal_p
            for label, lap in (("laplacian_minus_div_grad", pot.lap_h_p),
                               ("laplacian_div_grad", -pot.lap_h_p)):
                theorem[label] = base - lap
                lemma[label] = base - 6.0 * lap / n
        else:
            diagnostics.append(f"dimension bound n > 2 + 2/a fails (2 + 2/a = {2 + 2 / params.a:.6g})")
    else:
        diagnostics.append("h(p) outside [0, 1/K(n,2,-2)^2)")

    cond = theorem.get("laplacian_minus_div_grad")
    first = bool(h_positive and hardy_ok and dimension_ok and cond is not None and cond < 0.0)
    second_hyp = bool(h_positive and second_window and dimension_ok and cond is not None and cond > 0.0)

    mu_condition = "not evaluated"
    measured = "not measured"
    if solver_energy is not None and hardy_ok and pot.h0 >= 0.0:
        d_star = compute_constants(params_for(pot)).D_star
        # mu^(n/2) = n * (Nehari infimum) <= n * solver_energy
        if solver_energy < d_star:
            mu_condition = "violated by upper bound"
        else:
            mu_condition = "consistent (not certified)"
        measured = _energy_window(solver_energy, d_star)
    second = second_hyp and mu_condition != "violated by upper bound"

    literal = "(0,D*)" if first else "(D*,2D*)" if second else "none"
    if measured == "not measured":
        regime, decided_by = literal, "literal condition (advisory)"
    else:
        regime, decided_by = measured, "solver energy"
        if literal not in ("none", measured):
            diagnostics.append(f"literal condition suggests {literal}, solver energy lies in {measured}")
    return ExistenceVerdict(dimension_ok, h_positive, hardy_ok, second_window, theorem, lemma,
                            first, second, mu_condition, regime, literal, measured, decided_by,
                            tuple(diagnostics))


def _energy_window(energy: float, d_star: float) -> str:
    if energy <= 0.0:
        return "none"
    if energy < d_star:
        return "(0,D*)"
    if energy < 2.0 * d_star:
        return "(D*,2D*)"
    return "none"


# ----- Report -----

@dataclass(frozen=True)
class ExpansionReport:
    eps_grid: tuple
    energies: tuple
    points: tuple
    d_star: float
    fit: SeriesFit | None = None
    component_fits: dict = field(default_factory=dict)
    derived: MomentSlopes | None = None
    coefficients: ExpansionCoefficients | None = None
    literal_slopes: dict = field(default_factory=dict)
    analytic_slope_literal: float | None = None
    analytic_slope_corrected: float | None = None
    condition_value: float | None = None
    verdict: ExpansionVerdict = ExpansionVerdict.INCONCLUSIVE
    discrepancies: tuple = ()
    literal_condition_agrees: bool | None = None

    @property
    def fitted_limit(self) -> float | None:
        return None if self.fit is None else self.fit.extrapolated

    @property
    def fitted_slope(self) -> float | None:
        return None if self.fit is None else self.fit.slope

    def as_dict(self) -> dict:
        out = {
            "eps_grid": list(self.eps_grid),
            "energies": list(self.energies),
            "points": [p.as_dict() for p in self.points],
            "D_star": self.d_star,
            "verdict": self.verdict.value,
            "analytic_slope_literal": self.analytic_slope_literal,
            "analytic_slope_corrected": self.analytic_slope_corrected,
            "condition_value": self.condition_value,
            "verdict_basis": "fitted slope",
            "literal_condition_advisory": True,
            "literal_condition_agrees": self.literal_condition_agrees,
            "literal_slopes": self.literal_slopes,
            "component_fits": {k: v.as_dict() for k, v in self.component_fits.items()},
            "discrepancies": list(self.discrepancies),
        }
        if self.fit is not None:
            out["fit"] = self.fit.as_dict()
            out["fitted_limit"] = {"value": self.fit.extrapolated,
                                   "error": self.fit.extrapolation_error}
            out["fitted_slope"] = {"value": self.fit.slope, "error": self.fit.rms_residual}
        if self.derived is not None:
            out["derived_slopes"] = self.derived.as_dict()
        if self.coefficients is not None:
            out["coefficients"] = self.coefficients.as_dict()
        return out


def fit_expansion(points, model: SphereModel, pot: PotentialField,
                  fit_points: int = DEFAULT_FIT_POINTS,
                  rel_tol: float = DEFAULT_REL_TOL) -> ExpansionReport:
    """Fit the energy curve and attach derived and literal slopes plus the verdict.

    The verdict is below_D_star only for a negative fitted slope with
    fit_quality <= 0.1; anything else is inconclusive.
    """
    points = tuple(points)
    params = params_for(pot)
    consts = compute_constants(params)
    eps = [p.eps for p in points]
    energies = [p.energy for p in points]
    remainder = params.a * (params.n - 2.0)

    fit = fit_series(eps, energies, fit_points, remainder)
    component_fits = {
        name: fit_series(eps, [getattr(p, name) for p in points], fit_points, remainder)
        for name in ("grad", "hardy", "crit")
    }

    derived = coef = None
    literal, discrepancies = {}, []
    literal_slope = corrected = condition = None
    if _dimension_ok(params):
        derived = moment_slopes(model, pot, rel_tol)
        corrected = derived.energy
        coef = coefficients(params, rel_tol)
        scal, lap, n = model.scal_p, pot.lap_h_p, params.n
        literal = {
            "grad": -scal * coef.c1 * coef.i_ref,
            "grad_derivation_bracket": -scal * coef.c1_derivation * coef.i_ref,
            "hardy": -(scal * pot.h0 - lap / n) * coef.c2 * coef.i_ref,
            "crit": -scal * coef.c3 * coef.i_ref,
        }
        condition = (coef.a_na + pot.h0) * scal - 6.0 * lap / n
        literal_slope = consts.D_star * coef.b_na * condition
        literal["energy_theorem_form"] = consts.D_star * coef.b_na * ((coef.a_na + pot.h0) * scal - lap)
        literal["energy_opposite_laplacian"] = consts.D_star * coef.b_na * (
            (coef.a_na + pot.h0) * scal + 6.0 * lap / n)
        for name in ("grad", "hardy", "crit"):
            measured = component_fits[name].slope
            oracle = getattr(derived, name)
            if oracle != 0.0 and abs(measured - oracle) > _SLOPE_FLAG * abs(oracle):
                discrepancies.append(f"{name}: fitted slope {measured:.6g} vs derived {oracle:.6g}")
            if literal[name] != 0.0 and abs(literal[name] - oracle) > _SLOPE_FLAG * abs(oracle):
                discrepancies.append(f"{name}: literal slope {literal[name]:.6g} vs derived {oracle:.6g}")
        if abs(literal_slope - corrected) > _SLOPE_FLAG * max(abs(corrected), 1e-300):
            discrepancies.append(f"energy: literal slope {literal_slope:.6g} vs derived {corrected:.6g}")
    for msg in discrepancies:
        logger.warning("expansion discrepancy: %s", msg)

    below = fit.slope < 0.0 and fit.quality <= FIT_QUALITY_LIMIT
    verdict = ExpansionVerdict.BELOW_D_STAR if below else ExpansionVerdict.INCONCLUSIVE
    agrees = None if condition is None else (condition < 0.0) == (fit.slope < 0.0)
    if agrees is False:
        logger.warning("expansion: literal condition %.6g disagrees in sign with fitted slope %.6g",
                       condition, fit.slope)
    logger.info("expansion: limit=%.12g (D*=%.12g) slope=%.6g quality=%.3g verdict=%s",
                fit.extrapolated, consts.D_star, fit.slope, fit.quality, verdict.value)
    return ExpansionReport(
        eps_grid=tuple(eps),
        energies=tuple(energies),
        points=points,
        d_star=consts.D_star,
        fit=fit,
        component_fits=component_fits,
        derived=derived,
        coefficients=coef,
        literal_slopes=literal,
        analytic_slope_literal=literal_slope,
        analytic_slope_corrected=corrected,
        condition_value=condition,
        verdict=verdict,
        discrepancies=tuple(discrepancies),
        literal_condition_agrees=agrees,
    )


def run_expansion(model: SphereModel, pot: PotentialField, delta: float | None = None,
                  eps_count: int = 7, fit_points: int = DEFAULT_FIT_POINTS,
                  rel_tol: float = DEFAULT_REL_TOL, workers: int = 1) -> ExpansionReport:
    delta = default_delta(model) if delta is None else delta
    points = energy_curve(model, pot, default_eps_grid(delta, eps_count), delta, rel_tol, workers)
    return fit_expansion(points, model, pot, fit_points, rel_tol)

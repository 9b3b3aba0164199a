import math

import numpy as np
import pytest

from hslab import expansion
from hslab.bubbles import amplitude
from hslab.constants import ProblemParams, compute_constants, hardy_constant
from hslab.errors import ParameterError
from hslab.expansion import (
    ExpansionVerdict,
    coefficients,
    default_delta,
    default_eps_grid,
    energy_curve,
    existence_conditions,
    fit_series,
    moment_slopes,
    params_for,
    richardson_table,
    run_expansion,
)
from hslab.grid import RadialGrid
from hslab.manifold import PotentialField, SphereModel
from hslab.solver import max_along_ray, projected_energy


@pytest.fixture(scope="module")
def leading_order():
    model = SphereModel(5, 1.0)
    pot = PotentialField(5, 0.5 / hardy_constant(5) ** 2)
    return model, pot, run_expansion(model, pot, eps_count=7)


@pytest.fixture(scope="module")
def s5_run():
    model = SphereModel(5, 1.0)
    pot = PotentialField(5, 0.5 / hardy_constant(5) ** 2)
    return model, pot, run_expansion(model, pot, eps_count=9, fit_points=5)


@pytest.fixture(scope="module")
def slope_run():
    model = SphereModel(6, 1.0)
    pot = PotentialField(6, 1.0)
    return model, pot, run_expansion(model, pot, eps_count=9, fit_points=4)


def test_default_grid():
    delta = default_delta(SphereModel(5, 2.0))
    assert delta == pytest.approx(math.pi / 4.0)
    grid = default_eps_grid(delta, 4)
    assert grid == pytest.approx([delta / 10.0, delta / 20.0, delta / 40.0, delta / 80.0])
    with pytest.raises(ParameterError):
        default_eps_grid(delta, 0)


def test_leading_order_limit_is_threshold(leading_order):
    model, pot, report = leading_order
    d_star = compute_constants(params_for(pot)).D_star
    assert pot.h0 == pytest.approx(1.125)
    assert report.d_star == d_star
    assert report.fitted_limit == pytest.approx(d_star, rel=1e-4)
    assert report.fit.rms_residual >= 0.0
    assert len(report.points) == 7


def test_curve_points_are_projected_energies(leading_order):
    _, pot, report = leading_order
    for point in report.points:
        assert point.energy == pytest.approx(
            projected_energy(point.grad - point.hardy, point.crit, pot.n), rel=1e-14)
        assert point.abs_error >= 0.0


def test_energies_approach_threshold(leading_order):
    _, _, report = leading_order
    gaps = np.abs(np.array(report.energies) - report.d_star)
    assert gaps[-1] < gaps[0]


def test_component_slopes_match_derived_moments(slope_run):
    _, _, report = slope_run
    for name in ("grad", "hardy", "crit"):
        fitted = report.component_fits[name].slope
        derived = getattr(report.derived, name)
        assert fitted == pytest.approx(derived, rel=0.02), name
    assert report.component_fits["grad"].remainder is not None


def test_report_fields(slope_run):
    _, pot, report = slope_run
    out = report.as_dict()
    assert out["verdict"] in {v.value for v in ExpansionVerdict}
    assert set(out["fitted_limit"]) == {"value", "error"}
    assert out["derived_slopes"]["energy0"] == pytest.approx(report.d_star, rel=1e-8)
    assert report.analytic_slope_corrected == report.derived.energy
    assert report.coefficients.c_na == amplitude(6, params_for(pot).a)
    if report.verdict is ExpansionVerdict.BELOW_D_STAR:
        assert report.fitted_slope < 0.0


def test_richardson_removes_even_powers():
    eps = 0.1 * 2.0 ** -np.arange(4)
    values = 2.0 + 3.0 * eps ** 2 - 5.0 * eps ** 4 + 7.0 * eps ** 6
    table = richardson_table(values)
    assert [len(level) for level in table] == [4, 3, 2, 1]
    assert table[-1][0] == pytest.approx(2.0, rel=1e-13)
    assert abs(table[1][0] - 2.0) < abs(table[0][0] - 2.0)


def test_fit_series_on_exact_data():
    eps = 0.05 * 2.0 ** -np.arange(6)
    fit = fit_series(eps, 1.5 - 0.8 * eps ** 2, fit_points=4)
    assert fit.limit == pytest.approx(1.5, rel=1e-12)
    assert fit.slope == pytest.approx(-0.8, rel=1e-8)
    assert fit.rms_residual < 1e-14
    assert fit.quality < 1e-6
    assert fit.remainder is None
    assert fit.extrapolated == pytest.approx(1.5, rel=1e-12)


def test_fit_series_with_remainder_column():
    eps = 0.05 * 2.0 ** -np.arange(6)
    values = 1.0 + 2.0 * eps ** 2 + 4.0 * eps ** 3.5
    fit = fit_series(eps, values, fit_points=5, remainder_exponent=3.5)
    assert fit.slope == pytest.approx(2.0, rel=1e-6)
    assert fit.remainder == pytest.approx(4.0, rel=1e-4)
    near = 1.0 + 2.0 * eps ** 2 - 3.0 * eps ** 2.12
    close = fit_series(eps, near, fit_points=5, remainder_exponent=2.12)
    assert close.remainder == pytest.approx(-3.0, rel=1e-5)
    assert close.slope == pytest.approx(2.0, rel=1e-5)
    collinear = fit_series(eps, values, fit_points=5, remainder_exponent=2.0005)
    assert collinear.remainder is None


def test_fit_series_needs_points():
    with pytest.raises(ParameterError):
        fit_series([0.1, 0.05], [1.0, 1.0], fit_points=4)
    with pytest.raises(ParameterError):
        fit_series([0.1, 0.05, 0.025], [1.0, 1.0, 1.0], fit_points=1)


@pytest.mark.parametrize("n,ratio", [(6, 0.25), (5, 0.3), (7, 0.6)])
def test_reference_integral_matches_closed_form(n, ratio):
    coef = coefficients(ProblemParams.from_ratio(n, ratio))
    assert coef.i_ref == pytest.approx(coef.i_ref_closed_form, rel=1e-9)
    assert coef.c1 != coef.c1_derivation
    assert coef.c2 > 0.0 and coef.c3 > 0.0 and coef.b_na > 0.0


def test_coefficients_without_hardy_term_agree():
    coef = coefficients(ProblemParams(5, 0.0))
    assert coef.c1 == pytest.approx(coef.c1_derivation)
    assert coef.a_na == pytest.approx(coef.a_na_derivation)


@pytest.mark.parametrize("n,ratio", [(3, 0.1), (4, 0.0), (5, 0.8)])
def test_dimension_bound(n, ratio):
    params = ProblemParams.from_ratio(n, ratio)
    with pytest.raises(ParameterError, match="n > 2 \\+ 2/a"):
        coefficients(params)
    with pytest.raises(ParameterError):
        moment_slopes(SphereModel(n), PotentialField(n, params.lam))


def test_curve_input_validation():
    model = SphereModel(5, 1.0)
    pot = PotentialField(5, 1.0)
    delta = default_delta(model)
    with pytest.raises(ParameterError):
        energy_curve(model, pot, [delta / 40.0, delta / 20.0], delta)
    with pytest.raises(ParameterError):
        energy_curve(model, pot, [delta / 5.0], delta)
    with pytest.raises(ParameterError):
        energy_curve(model, pot, [], delta)
    with pytest.raises(ParameterError):
        energy_curve(model, pot, [0.01], math.pi / 2.0)


def test_discrete_test_function():
    model = SphereModel(6, 1.0)
    grid = RadialGrid.build(model, 512, first_node=1e-5)
    params = ProblemParams(6, 1.0)
    delta = default_delta(model)
    phi = expansion.test_function(grid, params, 0.01, delta)
    assert np.all(phi.values[grid.nodes >= 2.0 * delta] == 0.0)
    assert np.all(phi.values[grid.nodes < 1.9 * delta] > 0.0)
    with pytest.raises(ParameterError):
        expansion.test_function(grid, params, delta, delta)
    seeds = expansion.seed_fields(grid, params, delta, count=3)
    assert len(seeds) == 3
    assert seeds[2].values.max() > seeds[0].values.max()


def test_existence_structure():
    model = SphereModel(6, 1.0)
    verdict = existence_conditions(model, PotentialField(6, 1.0))
    assert verdict.dimension_ok and verdict.h_positive and verdict.hardy_ok
    assert set(verdict.theorem_condition) == {"laplacian_minus_div_grad", "laplacian_div_grad"}
    # h2 = 0: both sign conventions coincide
    values = list(verdict.theorem_condition.values())
    assert values[0] == values[1]
    assert verdict.mu_condition == "not evaluated"
    assert verdict.regime in {"(0,D*)", "(D*,2D*)", "none"}


def test_existence_laplacian_conventions_split():
    verdict = existence_conditions(SphereModel(6, 1.0), PotentialField(6, 1.0, h2=-4.0))
    t = verdict.theorem_condition
    assert t["laplacian_div_grad"] - t["laplacian_minus_div_grad"] == pytest.approx(2.0 * 48.0)


def test_existence_never_raises_out_of_range():
    model = SphereModel(5, 1.0)
    zero = existence_conditions(model, PotentialField(5, 0.0))
    assert not zero.h_positive
    assert zero.regime == "none"
    assert zero.diagnostics
    over = existence_conditions(model, PotentialField(5, 3.0))
    assert not over.hardy_ok
    assert over.theorem_condition == {}


def test_solver_energy_bounds_mu_condition():
    model = SphereModel(6, 1.0)
    pot = PotentialField(6, 1.0)
    d_star = compute_constants(params_for(pot)).D_star
    low = existence_conditions(model, pot, solver_energy=0.5 * d_star)
    high = existence_conditions(model, pot, solver_energy=1.5 * d_star)
    assert low.mu_condition == "violated by upper bound"
    assert not low.second_regime
    assert high.mu_condition == "consistent (not certified)"


def test_ray_maximum_matches_projection(leading_order):
    _, pot, report = leading_order
    for point in (report.points[0], report.points[3], report.points[-1]):
        _, peak = max_along_ray(point.grad - point.hardy, point.crit, pot.n)
        assert peak == pytest.approx(point.energy, rel=1e-8)


def test_s5_component_slopes_keep_near_remainder(s5_run):
    _, pot, report = s5_run
    remainder = params_for(pot).a * (pot.n - 2.0)
    assert remainder == pytest.approx(3.0 / math.sqrt(2.0))
    for name in ("grad", "hardy", "crit"):
        fit = report.component_fits[name]
        assert fit.remainder is not None, name
        assert fit.slope == pytest.approx(getattr(report.derived, name), rel=0.02), name


def test_increasing_potential_is_below_threshold():
    model = SphereModel(6, 1.0)
    pot = PotentialField(6, 1.0, h2=20.0)
    report = run_expansion(model, pot, eps_count=7)
    assert report.derived.energy < 0.0
    assert report.verdict is ExpansionVerdict.BELOW_D_STAR
    assert report.fitted_slope < 0.0
    out = report.as_dict()
    assert out["verdict_basis"] == "fitted slope"
    assert out["literal_condition_advisory"] is True


def test_decreasing_potential_is_inconclusive():
    model = SphereModel(6, 1.0)
    pot = PotentialField(6, 1.0, h2=-20.0)
    report = run_expansion(model, pot, eps_count=7)
    assert report.derived.energy > 0.0
    assert report.fitted_slope > 0.0
    assert report.verdict is ExpansionVerdict.INCONCLUSIVE


def test_second_window_example():
    pot = PotentialField(5, 0.9 / hardy_constant(5) ** 2)
    verdict = existence_conditions(SphereModel(5, 1.0), pot)
    assert (1.0 - pot.h0 * hardy_constant(5) ** 2) ** 2 == pytest.approx(0.01)
    assert verdict.second_window
    assert verdict.hardy_ok
    assert not verdict.dimension_ok
    assert verdict.regime == "none"


def test_solver_energy_decides_regime():
    model = SphereModel(6, 1.0)
    pot = PotentialField(6, 1.0, h2=-4.0, delta_cap=1.0)
    d_star = compute_constants(params_for(pot)).D_star
    literal = existence_conditions(model, pot)
    assert literal.decided_by == "literal condition (advisory)"
    assert literal.measured_regime == "not measured"
    assert literal.regime == literal.literal_regime
    measured = existence_conditions(model, pot, solver_energy=0.02 * d_star)
    assert measured.decided_by == "solver energy"
    assert measured.regime == measured.measured_regime == "(0,D*)"
    assert measured.mu_condition == "violated by upper bound"
    assert not measured.second_regime
    if measured.literal_regime not in ("none", "(0,D*)"):
        assert measured.diagnostics
    above = existence_conditions(model, pot, solver_energy=1.5 * d_star)
    assert above.regime == "(D*,2D*)"
    assert above.as_dict()["decided_by"] == "solver energy"

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hslab.errors import DivergentIntegralError, ParameterError
from hslab.quadrature import (
    IntegralSpec,
    closed_form_I,
    compute_I,
    integrate_radial,
    integrate_radial_with_error,
    recurrence_alpha,
    recurrence_beta,
    sample_specs,
)


def test_exponential_on_half_line():
    value, error = integrate_radial_with_error(lambda r: math.exp(-r))
    assert value == pytest.approx(1.0, rel=1e-12)
    assert 0.0 <= error < 1e-9


def test_endpoint_power_weight():
    value = integrate_radial(lambda r: math.exp(-r), endpoint_power=-0.5)
    assert value == pytest.approx(math.sqrt(math.pi), rel=1e-11)


def test_finite_interval_with_breakpoints():
    value = integrate_radial(lambda r: abs(r - 0.3), lower=0.0, upper=1.0, breakpoints=(0.3,))
    assert value == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), rel=1e-12)


def test_monotone_in_upper_limit():
    f = lambda r: r ** 2 / (1.0 + r * r) ** 3  # noqa: E731
    values = [integrate_radial(f, upper=u) for u in (0.5, 1.0, 2.0, 10.0)]
    values.append(integrate_radial(f))
    assert np.all(np.diff(values) > 0.0)


@pytest.mark.parametrize("rel_tol", [1e-15, 1e-14, 1e-2, 0.5])
def test_tolerance_range(rel_tol):
    with pytest.raises(ParameterError):
        integrate_radial(lambda r: math.exp(-r), rel_tol=rel_tol)


def test_bad_intervals():
    with pytest.raises(ParameterError):
        integrate_radial(lambda r: 1.0, lower=-1.0, upper=1.0)
    with pytest.raises(ParameterError):
        integrate_radial(lambda r: 1.0, lower=2.0, upper=1.0)
    with pytest.raises(ParameterError):
        integrate_radial(lambda r: 1.0, lower=1.0, upper=2.0, endpoint_power=0.5)
    with pytest.raises(ParameterError):
        integrate_radial(lambda r: 1.0, upper=1.0, endpoint_power=-1.0)


def test_known_member():
    spec = IntegralSpec(3.0, 5.0, 1.0)
    assert compute_I(spec) == pytest.approx(1.0 / 24.0, rel=1e-10)
    assert closed_form_I(spec) == pytest.approx(1.0 / 24.0, rel=1e-14)


def test_negative_alpha_member():
    spec = IntegralSpec(-0.5, 2.0, 0.5)
    assert compute_I(spec) == pytest.approx(closed_form_I(spec), rel=1e-9)


@pytest.mark.parametrize("spec,bound", [
    (IntegralSpec(1.0, 2.0, 0.0), "a > 0"),
    (IntegralSpec(-1.0, 2.0, 1.0), "alpha > -1"),
    (IntegralSpec(3.0, 2.0, 1.0), "2a*beta - alpha > 1"),
])
def test_divergent_integrals_name_their_bound(spec, bound):
    with pytest.raises(DivergentIntegralError) as excinfo:
        compute_I(spec)
    assert excinfo.value.bound == bound
    with pytest.raises(DivergentIntegralError):
        closed_form_I(spec)


def test_recurrence_ranges():
    with pytest.raises(ParameterError):
        recurrence_alpha(IntegralSpec(0.5, 3.0, 1.0))
    with pytest.raises(ParameterError):
        recurrence_beta(IntegralSpec(0.5, 1.0, 1.0))


@st.composite
def recurrence_specs(draw):
    a = draw(st.floats(0.3, 1.0))
    alpha = 2.0 * a - 1.0 + draw(st.floats(0.1, 3.0))
    beta = max(1.0, (alpha + 1.0) / (2.0 * a)) + draw(st.floats(1.0, 3.0))
    return IntegralSpec(alpha, beta, a)


@settings(max_examples=100, deadline=None)
@given(recurrence_specs())
def test_recurrences_match_closed_form(spec):
    lower_beta = IntegralSpec(spec.alpha - 2.0 * spec.a, spec.beta - 1.0, spec.a)
    assert recurrence_alpha(spec) == pytest.approx(closed_form_I(spec), rel=1e-8)
    assert recurrence_beta(spec) == pytest.approx(closed_form_I(lower_beta), rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(recurrence_specs())
def test_quadrature_matches_closed_form(spec):
    assert compute_I(spec) == pytest.approx(closed_form_I(spec), rel=1e-8)


def test_sample_specs_are_valid_and_seeded():
    specs = sample_specs(40, seed=7)
    assert specs == sample_specs(40, seed=7)
    assert specs != sample_specs(40, seed=8)
    for spec in specs:
        spec.check()
        assert spec.alpha > 2.0 * spec.a - 1.0
        assert spec.beta > 1.0
        IntegralSpec(spec.alpha - 2.0 * spec.a, spec.beta - 1.0, spec.a).check()

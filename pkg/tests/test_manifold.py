import math

import numpy as np
import pytest

from hslab.constants import hardy_constant
from hslab.errors import ParameterError
from hslab.manifold import (
    CUTOFF_SLOPE_BOUND,
    PotentialField,
    SphereModel,
    cutoff,
    cutoff_derivative,
    cutoff_second_derivative,
    measure,
    potential,
    rho,
    volume_density,
)
from hslab.quadrature import integrate_radial


@pytest.mark.parametrize("n,radius", [(2, 1.0), (3.5, 1.0), (4, 0.0), (4, -1.0), (4, math.inf)])
def test_model_validation(n, radius):
    with pytest.raises(ParameterError):
        SphereModel(n, radius)


def test_model_properties():
    model = SphereModel(5, 2.0)
    assert model.injectivity_radius == pytest.approx(2.0 * math.pi)
    assert model.scal_p == pytest.approx(5.0)
    assert model.density_coefficient == pytest.approx(-model.scal_p / (6.0 * model.n))
    assert model.omega == pytest.approx(8.0 * math.pi ** 2 / 3.0)


@pytest.mark.parametrize("n,radius", [(3, 1.0), (5, 2.0), (6, 0.5)])
def test_volume_density_expansion(n, radius):
    model = SphereModel(n, radius)
    r = 1e-3 * radius
    slope = (volume_density(model, r) - 1.0) / r ** 2
    assert slope == pytest.approx(model.density_coefficient, rel=1e-4)
    assert volume_density(model, 0.0) == 1.0


@pytest.mark.parametrize("n,radius", [(3, 2.0), (4, 1.0), (6, 0.7)])
def test_measure_integrates_to_volume(n, radius):
    model = SphereModel(n, radius)
    top = model.injectivity_radius
    total = integrate_radial(lambda r: measure(model, r), upper=top)
    assert total == pytest.approx(model.total_volume, rel=1e-10)


def test_measure_matches_density():
    model = SphereModel(4, 1.5)
    r = np.linspace(0.1, 4.0, 9)
    expected = model.omega * r ** 3 * volume_density(model, r)
    np.testing.assert_allclose(measure(model, r), expected, rtol=1e-13)


def test_range_checks():
    model = SphereModel(4, 1.0)
    with pytest.raises(ParameterError):
        volume_density(model, math.pi)
    with pytest.raises(ParameterError):
        measure(model, -0.1)
    assert measure(model, math.pi) == pytest.approx(0.0, abs=1e-40)
    assert rho(SphereModel(4, 1.0), 0.1) == 0.1
    assert rho(model, math.pi) == math.pi
    np.testing.assert_array_equal(rho(model, np.array([0.0, 1.0])), [0.0, 1.0])
    with pytest.raises(ParameterError):
        rho(model, math.pi + 1e-9)


def test_potential_capped_beyond_delta():
    model = SphereModel(6, 1.0)
    field = PotentialField(6, h0=1.0, h2=-4.0, delta_cap=0.5)
    r = np.array([0.0, 0.25, 0.5, 1.0, 3.0])
    np.testing.assert_allclose(potential(model, field, r), [1.0, 0.75, 0.0, 0.0, 0.0])
    assert field.lap_h_p == pytest.approx(48.0)


def test_potential_validation():
    with pytest.raises(ParameterError):
        PotentialField(5, math.nan)
    with pytest.raises(ParameterError):
        PotentialField(5, 1.0, delta_cap=0.0)
    field = PotentialField(5, 2.5)
    with pytest.raises(ParameterError):
        field.check_singular_range(1.0 / hardy_constant(5) ** 2)
    PotentialField(5, 2.0).check_singular_range(1.0 / hardy_constant(5) ** 2)


@pytest.mark.parametrize("delta", [0.1, 0.5, 2.0])
def test_cutoff_shape(delta):
    r = np.linspace(0.0, 3.0 * delta, 601)
    eta = cutoff(delta, r)
    assert np.all(eta[r <= delta] == 1.0)
    assert np.all(eta[r >= 2.0 * delta] == 0.0)
    assert np.all(np.diff(eta) <= 0.0)
    slope = np.max(np.abs(cutoff_derivative(delta, r))) * delta
    assert slope <= CUTOFF_SLOPE_BOUND + 1e-12
    assert cutoff_derivative(delta, 1.5 * delta) * delta == pytest.approx(-CUTOFF_SLOPE_BOUND)


def test_cutoff_derivatives_match_differences():
    delta, h = 0.4, 1e-6
    for r in (0.45, 0.55, 0.75):
        fd1 = (cutoff(delta, r + h) - cutoff(delta, r - h)) / (2 * h)
        fd2 = (cutoff_derivative(delta, r + h) - cutoff_derivative(delta, r - h)) / (2 * h)
        assert cutoff_derivative(delta, r) == pytest.approx(fd1, rel=1e-6)
        assert cutoff_second_derivative(delta, r) == pytest.approx(fd2, rel=1e-6)


def test_cutoff_rejects_nonpositive_delta():
    with pytest.raises(ParameterError):
        cutoff(0.0, 1.0)

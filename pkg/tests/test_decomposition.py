import math

import pytest

from hslab.bubbles import BubbleKind
from hslab.constants import ProblemParams, compute_constants, threshold_beta_star
from hslab.decomposition import (
    ChartedField,
    GlueSpec,
    NoBubbleReason,
    ball_energy,
    brezis_lieb_check,
    build_sequence,
    charted_energy,
    decompose,
    default_gamma,
    default_scales,
    detect_concentration,
    extract_and_compare,
    glue_bubble,
    remainder_trend,
)
from hslab.errors import ParameterError
from hslab.expansion import default_delta, params_for, seed_fields
from hslab.grid import RadialGrid
from hslab.manifold import PotentialField, SphereModel
from hslab.solver import minimize, residual_norm

SCALES = default_scales(5, 12)


@pytest.fixture(scope="module")
def setting():
    model = SphereModel(6, 1.0)
    grid = RadialGrid.build(model, 2048, first_node=1e-6)
    pot = PotentialField(6, 1.0)
    d_star = compute_constants(ProblemParams(6, 1.0)).D_star
    return grid, pot, d_star


def singular(cutoff_radius=0.5, scale=SCALES[0], power=1.0):
    return GlueSpec(BubbleKind.SINGULAR, scale, cutoff_radius, scale_power=power)


@pytest.fixture(scope="module")
def solved(setting):
    grid, _, _ = setting
    pot = PotentialField(6, 1.0, -4.0, delta_cap=1.0)
    params = params_for(pot)
    seed = seed_fields(grid, params, default_delta(grid.model), count=1)[0]
    result = minimize(seed, pot, params)
    return pot, result.minimizer


@pytest.fixture(scope="module")
def single_bubble(setting):
    grid, pot, _ = setting
    return decompose(grid, pot, [singular()], SCALES)


@pytest.fixture(scope="module")
def with_background(setting, solved):
    grid, _, _ = setting
    pot, u = solved
    return decompose(grid, pot, [singular()], SCALES, u, extract=False)


def test_default_scales_and_gamma():
    assert default_scales() == [2.0 ** -m for m in range(5, 13)]
    params = ProblemParams(6, 1.0)
    assert default_gamma(params) == pytest.approx(1.5 * threshold_beta_star(params))


def test_single_bubble_energy_identity(single_bubble, setting):
    _, _, d_star = setting
    report = single_bubble
    assert report.remainder_decreasing
    assert report.noise_floor == pytest.approx(1e-4 * d_star)
    assert all(rise <= report.noise_floor for _, _, rise in report.remainder_increases)
    assert all("noise floor" in note for note in report.notes)
    assert report.beta_star == pytest.approx(d_star)
    rows = report.rows
    assert [r.scale for r in rows] == SCALES
    assert all(r.sum_bubble_energies == d_star for r in rows)
    assert rows[-1].scale == 2.0 ** -12
    assert rows[-1].remainder_energy_norm <= 0.01 * d_star
    assert all(r.brezis_lieb_defect == 0.0 for r in rows)
    assert all(r.background_energy == 0.0 for r in rows)


def test_single_bubble_is_extracted(single_bubble):
    for row in single_bubble.rows:
        if row.scale > 2.0 ** -8:
            continue
        ext = row.extraction
        assert ext.found, ext.no_bubble
        assert ext.kind is BubbleKind.SINGULAR
        assert row.concentration.method == "pole"
        assert row.scale / 2.0 <= ext.recovered_scale <= 2.0 * row.scale
        assert ext.profile_mismatch <= 0.05


def test_report_serialises(single_bubble):
    out = single_bubble.as_dict()
    assert len(out["rows"]) == len(SCALES)
    assert out["rows"][-1]["extraction"]["kind"] == "singular"
    assert out["scaling_exponent"] == "(2-n)/2"
    assert len(single_bubble.rows[0].csv_row()) == 7


def test_background_energy_adds(with_background, setting, solved):
    grid, _, d_star = setting
    pot, u = solved
    assert residual_norm(u, pot) <= 1e-6
    rows = with_background.rows
    assert 0.0 < rows[0].background_energy < d_star
    assert rows[-1].remainder_energy_norm <= 0.01 * d_star
    assert all(r.background_energy == rows[0].background_energy for r in rows)
    assert abs(rows[-1].interaction_energy) < abs(rows[0].interaction_energy)
    assert rows[0].extraction is None


def test_brezis_lieb_defect_vanishes(with_background):
    defects = [r.brezis_lieb_defect for r in with_background.rows]
    assert defects[0] > 0.0
    assert defects[-1] <= 0.1 * defects[1]


def test_brezis_lieb_without_background(setting):
    grid, pot, _ = setting
    bubble = glue_bubble(singular(), grid, pot)
    assert brezis_lieb_check(None, [bubble]) == [0.0]
    assert brezis_lieb_check(grid.zeros(), [bubble, bubble]) == [0.0, 0.0]


def test_two_pole_bubbles_add_up():
    model = SphereModel(6, 1.0)
    grid = RadialGrid.build(model, 4096, first_node=1e-8)
    pot = PotentialField(6, 1.0)
    d_star = compute_constants(ProblemParams(6, 1.0)).D_star
    specs = [singular(), singular(scale=SCALES[0] ** 2, power=2.0)]
    report = decompose(grid, pot, specs, default_scales(5, 8), extract=False)
    last = report.rows[-1]
    assert last.sum_bubble_energies == pytest.approx(2.0 * d_star)
    assert last.total_energy == pytest.approx(2.0 * d_star, rel=0.01)


def test_concentration_radius_tracks_scale(setting):
    grid, pot, _ = setting
    scale = 2.0 ** -8
    v = glue_bubble(singular(scale=scale), grid, pot)
    total = ball_energy(v, 0.0, grid.model.injectivity_radius)
    conc = detect_concentration(v, 0.5 * total)
    assert conc.method == "pole"
    assert scale / 4.0 <= conc.radius <= 4.0 * scale
    with pytest.raises(ParameterError):
        detect_concentration(v, 2.0 * total)
    with pytest.raises(ParameterError):
        detect_concentration(v, 0.0)


def test_larger_gamma_needs_larger_ball(setting):
    grid, pot, _ = setting
    v = glue_bubble(singular(scale=2.0 ** -7), grid, pot)
    total = ball_energy(v, 0.0, grid.model.injectivity_radius)
    radii = [detect_concentration(v, f * total).radius for f in (0.2, 0.4, 0.6)]
    assert radii[0] < radii[1] < radii[2]


def test_offpole_standard_bubble(setting):
    grid, pot, _ = setting
    scale = 2.0 ** -8
    spec = GlueSpec(BubbleKind.STANDARD, scale, 0.3, center=1.5)
    v = glue_bubble(spec, grid, pot)
    d_star_standard = compute_constants(ProblemParams(6, 0.0)).d_star
    assert charted_energy(v, pot).total == pytest.approx(d_star_standard, rel=0.01)

    total = ball_energy(v, 1.5, grid.model.injectivity_radius)
    conc = detect_concentration(v, 0.5 * total)
    assert conc.method == "offpole"
    assert conc.center == pytest.approx(1.5, abs=0.02)
    assert conc.radius < 0.05
    ext = extract_and_compare(v, conc, pot)
    assert ext.found
    assert ext.kind is BubbleKind.STANDARD
    assert scale / 2.0 <= ext.recovered_scale <= 2.0 * scale
    assert ext.profile_mismatch <= 0.05


def test_background_alone_has_no_bubble(setting, solved):
    grid, _, _ = setting
    pot, u = solved
    report = decompose(grid, pot, [], [2.0 ** -8], u)
    row = report.rows[0]
    assert row.sum_bubble_energies == 0.0
    assert not row.extraction.found
    assert row.extraction.no_bubble in {reason.value for reason in NoBubbleReason}


def test_spread_field_is_not_concentrated(setting, solved):
    grid, _, _ = setting
    pot, u = solved
    v = ChartedField(u)
    total = ball_energy(v, 0.0, grid.model.injectivity_radius)
    conc = detect_concentration(v, 0.5 * total)
    ext = extract_and_compare(v, conc, pot)
    assert ext.no_bubble == NoBubbleReason.NOT_CONCENTRATED.value
    assert ext.recovered_scale is None


@pytest.mark.parametrize("kwargs", [
    {"kind": "singular", "scale": 0.01, "cutoff_radius": 0.5, "center": 1.0},
    {"kind": "standard", "scale": 0.01, "cutoff_radius": 0.5},
    {"kind": "singular", "scale": 0.06, "cutoff_radius": 0.5},
    {"kind": "singular", "scale": 0.0, "cutoff_radius": 0.5},
    {"kind": "singular", "scale": 0.01, "cutoff_radius": -0.5},
    {"kind": "standard", "scale": 0.01, "cutoff_radius": 0.3, "center": -1.0},
])
def test_glue_spec_validation(kwargs):
    with pytest.raises(ParameterError):
        GlueSpec(**kwargs)


def test_glue_spec_scaling():
    spec = GlueSpec("singular", 0.01, 0.5, scale_power=2.0)
    assert spec.kind is BubbleKind.SINGULAR
    assert spec.at_scale(0.1).scale == pytest.approx(0.01)
    assert spec.at_pole


def test_glue_spec_must_fit_model(setting):
    grid, pot, _ = setting
    with pytest.raises(ParameterError):
        glue_bubble(GlueSpec("singular", 0.01, 1.0), grid, pot)
    with pytest.raises(ParameterError):
        glue_bubble(GlueSpec("standard", 0.01, 0.3, center=3.0), grid, pot)
    with pytest.raises(ParameterError):
        glue_bubble(GlueSpec("standard", 0.01, 0.3, center=0.5), grid, pot)


def test_sequence_validation(setting):
    grid, pot, _ = setting
    with pytest.raises(ParameterError):
        build_sequence(None, [], SCALES, grid, pot)
    with pytest.raises(ParameterError):
        build_sequence(None, [singular(), singular()], SCALES, grid, pot)
    near = [GlueSpec("standard", 0.01, 0.3, center=1.5), GlueSpec("standard", 0.01, 0.3, center=1.8)]
    with pytest.raises(ParameterError):
        build_sequence(None, near, [0.01], grid, pot)


def test_sequence_scales_each_bubble(setting):
    grid, pot, _ = setting
    specs = [singular(), GlueSpec("standard", 0.01, 0.3, center=1.5, scale_power=1.0)]
    seq = build_sequence(None, specs, [2.0 ** -6, 2.0 ** -7], grid, pot)
    assert len(seq) == 2
    assert len(seq[0].offpole) == 1
    assert seq[1].pole.values[0] > seq[0].pole.values[0]
    assert math.isclose(seq[0].offpole[0][0], 1.5)


def test_brezis_lieb_defect_stagnates_without_concentration(solved):
    _, u = solved
    fixed = u.scaled(0.5)
    defects = brezis_lieb_check(u, [fixed, fixed, fixed])
    assert defects[0] > 0.0
    assert defects[-1] == pytest.approx(defects[0], rel=1e-12)


def test_remainder_trend_lists_every_rise():
    rem = [1e-3, 5.1e-6, 6.5e-6, 1.7e-5]
    within, rises = remainder_trend(rem, 0.058)
    assert within
    assert [i for i, _ in rises] == [1, 2]
    assert rises[1][1] == pytest.approx(1.05e-5)
    assert remainder_trend(rem, 0.0) == (False, rises)
    assert remainder_trend([3.0, 2.0, 1.0], 0.0) == (True, ())


def test_report_lists_increases(single_bubble):
    out = single_bubble.as_dict()
    assert out["noise_floor"] == single_bubble.noise_floor
    assert len(out["remainder_increases"]) == len(single_bubble.remainder_increases)
    for item in out["remainder_increases"]:
        assert item["to_scale"] == item["from_scale"] / 2.0
        assert item["increase"] > 0.0

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glauberlab.potentials import (
    Profile,
    SampledFunction,
    beta_family_check,
    check_positive_definite,
    check_regularity,
    check_stability_numeric,
    explicit,
    growth_at_origin,
    ht_bound,
    make_special_class,
    quadratic_form_minimum,
    special,
    sum_of,
    zero,
)
from glauberlab.potentials.table import TABLE_1D, TABLE_DD, indicator_counterexample

# mpmath at 30 digits: -ln(1 - e^-1)
PHI_GAUSS_AT_1 = 0.458675145387081891


def gauss():
    return special("gauss", t=1.0, a=0.0)


# evaluation ---------------------------------------------------------------


def test_zero_potential_is_zero():
    p = zero(1)
    assert np.all(p(np.linspace(-3, 3, 11)) == 0.0)
    assert p.is_zero


def test_special_class_value_and_singularity():
    p = gauss()
    assert p(0.0) == math.inf
    assert p(1.0) == pytest.approx(PHI_GAUSS_AT_1, rel=1e-14)
    assert p(-1.0) == p(1.0)


def test_boltzmann_of_infinite_is_exactly_zero():
    assert gauss().boltzmann(0.0) == 0.0


def test_zero_profile_gives_zero_potential():
    p = make_special_class(lambda x: np.zeros(np.shape(x)[:-1]), dimension=1)
    assert np.all(p(np.linspace(-2, 2, 9)) == 0.0)


def test_exp_cos_is_negative_where_cosine_is():
    p = special("exp", modulation="cos", t=1.0, a=3.0)
    x = np.linspace(0.05, 4.0, 200)
    neg = np.cos(3 * x) < -1e-3
    assert np.all(p(x)[neg] < 0)
    assert np.all(p(x)[~neg & (np.cos(3 * x) > 1e-3)] > 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 6.0), st.sampled_from(TABLE_1D))
def test_profile_inverts_phi(x, entry):
    p = make_special_class(entry.profile)
    f = float(entry.profile(x))
    if f < 1 - 1e-9:
        assert -math.expm1(-float(p(x))) == pytest.approx(f, rel=1e-12, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-8.0, 8.0), st.sampled_from(TABLE_1D))
def test_symmetry_and_lower_bound(x, entry):
    p = make_special_class(entry.profile)
    assert p(x) == p(-x)
    assert p(x) >= p.lower_bound - 1e-12


def test_rejects_profile_above_one_at_origin():
    with pytest.raises(ValueError):
        make_special_class(lambda x: 2.0 * np.exp(-np.sum(x ** 2, axis=-1)), dimension=1)


def test_rejects_profile_exceeding_origin_value():
    vals = np.zeros(256)
    vals[128] = 0.5
    vals[140] = 0.9
    with pytest.raises(ValueError):
        make_special_class(SampledFunction(vals, 8.0, 1))


def test_invalid_family_parameters_rejected():
    with pytest.raises(ValueError):
        special("gauss", t=-1.0, a=0.0)


def test_sum_absorbs_infinity():
    p = sum_of(gauss(), explicit("square_well", 1, height=-2.0, radius=1.5))
    assert p(0.0) == math.inf
    assert p(1.0) == pytest.approx(PHI_GAUSS_AT_1 - 2.0)


def test_scaled_multiplies_by_beta():
    p = gauss()
    assert p.scaled(0.5)(1.0) == pytest.approx(0.5 * PHI_GAUSS_AT_1)


# positive definiteness ------------------------------------------------


def test_gauss_cos_passes_fourier_check():
    f = SampledFunction.from_callable(lambda x: np.exp(-x[..., 0] ** 2) * np.cos(2 * x[..., 0]), 40.0, 4096, 1)
    assert check_positive_definite(f, 1e-8).passed


def test_zero_function_passes_with_zero_minimum():
    rep = check_positive_definite(SampledFunction(np.zeros(64), 4.0, 1))
    assert rep.passed
    assert rep.witness["min_fourier"] == 0.0


def test_indicator_fails_and_quadratic_form_agrees():
    s = indicator_counterexample()
    rep = check_positive_definite(s)
    assert not rep.passed
    assert rep.witness["min_fourier"] < 0
    # independent route: a direct quadratic form goes negative
    assert quadratic_form_minimum(indicator_counterexample(16.0, 256), points=48) < 0


def test_non_power_of_two_grid_rejected():
    with pytest.raises(ValueError):
        SampledFunction(np.zeros(100), 4.0, 1)


def test_nan_samples_rejected():
    v = np.zeros(64)
    v[3] = np.nan
    with pytest.raises(ValueError):
        SampledFunction(v, 4.0, 1)


@pytest.mark.parametrize("entry", TABLE_1D + TABLE_DD, ids=lambda e: e.name)
def test_table_entries_are_positive_definite(entry):
    assert check_positive_definite(entry.samples(), 1e-8).passed


@pytest.mark.parametrize("entry", TABLE_1D, ids=lambda e: e.name)
def test_grid_refinement_does_not_flip(entry):
    coarse = check_positive_definite(entry.samples(), 1e-8)
    fine_s = SampledFunction.from_callable(entry.profile, entry.L, 2 * entry.n, 1, entry.images)
    fine = check_positive_definite(fine_s, 1e-8)
    assert fine.passed or fine.witness["min_relative"] >= -10 * 1e-8 or not coarse.passed


def test_sampled_csv_roundtrip(tmp_path):
    s = TABLE_1D[0].samples()
    s.to_csv(tmp_path / "f.csv")
    back = SampledFunction.from_csv(tmp_path / "f.csv")
    assert back.n == s.n and back.L == pytest.approx(s.L)
    assert np.array_equal(back.values, s.values)


# regularity ----------------------------------------------------------------


def test_regularity_zero():
    rep = check_regularity(zero(1))
    assert rep.passed and rep.witness["integral"] == 0.0


def test_regularity_gauss_matches_quadrature_oracle():
    rep = check_regularity(gauss(), R=1.0)
    assert rep.passed
    # mpmath: int_1^inf -ln(1 - e^{-x^2}) dx, and the bound int_1^inf 2 e^{-x^2} dx = sqrt(pi) erfc(1)
    assert rep.witness["integral"] == pytest.approx(0.156785877791491, rel=1e-4)
    assert rep.witness["integral"] <= 0.278805585280662


def test_coulomb_tail_is_not_regular():
    assert not check_regularity(explicit("inverse_power", 1, c=1.0, p=1.0), R=1.0).passed


def test_unbounded_below_rejected():
    with pytest.raises(ValueError):
        check_regularity(replace(explicit("inverse_power", 1), lower_bound=-math.inf))


# stability ----------------------------------------------------------------


def test_stability_zero():
    rep = check_stability_numeric(zero(1), trials=500)
    assert rep.passed and rep.witness["min_energy_per_particle"] == 0.0
    assert "falsification probe" in rep.note


def test_stability_special_class_probe_passes():
    p = special("gauss", modulation="cos", t=1.0, a=2.0)
    assert check_stability_numeric(p, n_max=12, trials=10_000, seed=1).passed


def test_attractive_gaussian_is_flagged():
    p = explicit("gaussian", 1, amplitude=-1.0, t=1.0)
    rep = check_stability_numeric(p, n_max=12, trials=2000)
    assert not rep.passed
    # oracle: n points in a ball of radius 0.1 have U/n close to -(n-1)/2
    pts = np.random.default_rng(0).uniform(-0.1, 0.1, size=(12, 1))
    diff = pts[:, None, 0] - pts[None, :, 0]
    U = -0.5 * np.sum(np.exp(-diff[~np.eye(12, dtype=bool)] ** 2))
    assert rep.witness["min_energy_per_particle"] <= U / 12 + 1e-9


# beta family --------------------------------------------------------------


def test_beta_equal_beta_bar_is_identity():
    s = TABLE_1D[0].samples()
    rep = beta_family_check(s, 1.0, 1.0)
    assert rep.passed and rep.witness["ratio"] == 1.0


@pytest.mark.parametrize("ratio", [0.1, 0.25, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("entry", TABLE_1D, ids=lambda e: e.name)
def test_beta_family_passes_below_beta_bar(entry, ratio):
    assert beta_family_check(entry.samples(), ratio, 1.0).passed


def test_beta_family_above_beta_bar_is_informative():
    f = SampledFunction.from_callable(lambda x: np.exp(-x[..., 0] ** 2), 40.0, 4096, 1)
    rep = beta_family_check(f, 4.0, 1.0)
    assert rep.note
    assert rep.witness["ratio"] == 4.0


def test_beta_family_rejects_values_above_one():
    with pytest.raises(ValueError):
        beta_family_check(SampledFunction(np.full(64, 1.5), 4.0, 1), 0.5, 1.0)


# growth at the origin -------------------------------------------------------


def test_growth_gauss_is_bounded():
    rep = growth_at_origin(gauss())
    assert rep.passed
    # series: phi + 2 ln x = x^2/2 + O(x^4); at x = 0.1 this is 0.004996
    assert rep.witness["sup"] <= 0.01
    assert rep.witness["sup"] == pytest.approx(0.0049958333368, rel=1e-6)


def test_growth_zero_is_negative():
    rep = growth_at_origin(zero(1))
    assert rep.passed and rep.witness["sup"] < 0


def test_growth_quartic_exponent_is_flagged():
    p = make_special_class(lambda x: np.exp(-np.sum(x ** 2, axis=-1) ** 2), dimension=1)
    rep = growth_at_origin(p)
    assert not rep.passed


@pytest.mark.parametrize("entry", [e for e in TABLE_1D + TABLE_DD], ids=lambda e: e.name)
def test_growth_finite_for_table(entry):
    p = make_special_class(entry.profile)
    f0 = float(entry.profile(np.zeros((1, entry.profile.dimension)))[0])
    if f0 == pytest.approx(1.0):
        assert growth_at_origin(p).passed


# high temperature bound --------------------------------------------------------


def test_ht_bound_square_well_closed_form():
    well = explicit("square_well", 1, height=1.0, radius=1.0)
    c = ht_bound(well, zero(1), 0.1)
    assert c == pytest.approx(1 - 0.1 * 2 * (1 - math.exp(-1)), abs=1e-10)
    assert c == pytest.approx(0.873575888234288, abs=1e-10)


@given(st.floats(0.0, 50.0))
@settings(max_examples=20, deadline=None)
def test_ht_bound_phi1_zero_is_one(rho):
    assert ht_bound(zero(1), gauss(), rho) == 1.0


def test_ht_bound_can_be_negative():
    well = explicit("square_well", 1, height=1.0, radius=1.0)
    assert ht_bound(well, zero(1), 5.0) < 0


def test_check_report_serializes():
    rep = check_positive_definite(indicator_counterexample())
    d = rep.to_dict()
    assert d["kind"] == "PositiveDefinite" and d["passed"] is False


def test_profile_dimension_matches():
    p = Profile("gauss", {"t": 1.0, "a": [1.0, 0.5]}, 2, "cos")
    assert make_special_class(p).dimension == 2

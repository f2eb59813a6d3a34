import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glauberlab.configuration import (
    Affine,
    Box,
    Bump,
    Configuration,
    CylinderFunction,
    GibbsSpec,
    Polynomial,
    d_minus,
    d_plus,
    eval_cylinder,
    local_energy,
    papangelou,
    random_cylinder,
    torus_distance,
)
from glauberlab.potentials import explicit, special, zero

BOX = Box(10.0, 1)
coords = st.floats(0.0, 10.0, exclude_max=True, allow_nan=False)


def linear(box=BOX, center=(3.0,), width=2.0):
    return CylinderFunction(box, (Bump(center, width),), Affine(0.0, (1.0,)))


def gauss_spec(z=1.0, beta=1.0):
    return GibbsSpec(special("gauss", t=1.0, a=0.0), z, beta)


# box and distance --------------------------------------------------------


def test_torus_distance_examples():
    assert torus_distance(BOX, 1.0, 9.0) == pytest.approx(2.0)
    assert torus_distance(BOX, 4.2, 4.2) == 0.0
    assert torus_distance(Box(10.0, 2), [0, 0], [5, 5]) == pytest.approx(5 * math.sqrt(2))


@settings(max_examples=200)
@given(coords, coords, coords)
def test_torus_metric_properties(x, y, w):
    dxy = torus_distance(BOX, x, y)
    assert dxy == pytest.approx(torus_distance(BOX, y, x))
    assert 0 <= dxy <= 5.0 + 1e-12
    assert dxy <= torus_distance(BOX, x, w) + torus_distance(BOX, w, y) + 1e-12


def test_box_warns_when_too_small_for_cutoff():
    with pytest.warns(UserWarning):
        Box(2.0, 1).check_potential(special("gauss", t=1.0, a=0.0))


# configurations ------------------------------------------------------------


def test_remove_absent_point_raises():
    with pytest.raises(KeyError):
        Configuration([[1.0]], 1).remove([2.0])


@settings(max_examples=100)
@given(st.lists(coords, max_size=6), coords)
def test_insert_remove_roundtrip(pts, x):
    g = Configuration(np.array(pts).reshape(-1, 1), 1)
    h = g.insert([x])
    assert len(h) == len(g) + 1 and [x] in h
    assert h.remove([x]) == g


def test_multiplicity_is_kept():
    g = Configuration([[1.0], [1.0]], 1)
    assert len(g) == 2
    assert len(g.remove([1.0])) == 1


def test_configuration_csv_roundtrip(tmp_path):
    g = Configuration(np.random.default_rng(0).uniform(0, 10, (5, 2)), 2)
    g.to_csv(tmp_path / "g.csv")
    assert Configuration.from_csv(tmp_path / "g.csv") == g


# energies ------------------------------------------------------------------


def test_local_energy_examples():
    empty = Configuration(None, 1)
    assert local_energy(gauss_spec(), BOX, 1.0, empty) == 0.0
    g = Configuration([[0.0], [2.0], [7.0]], 1)
    assert local_energy(GibbsSpec(zero(1), 1.0), BOX, 1.0, g) == 0.0
    # equals phi(1) = -ln(1 - e^-1)
    assert local_energy(gauss_spec(), BOX, 1.0, Configuration([[0.0]], 1)) == pytest.approx(
        0.458675145387081891, rel=1e-14)


def test_papangelou_examples():
    g = Configuration([[0.0], [2.0]], 1)
    assert papangelou(GibbsSpec(zero(1), 1.7), BOX, 4.0, g) == 1.7
    # hard core at an occupied point
    assert papangelou(gauss_spec(), BOX, 2.0, g) == 0.0
    # z = 2 and E = ln 2
    well = explicit("square_well", 1, height=math.log(2.0), radius=0.5)
    assert papangelou(GibbsSpec(well, 2.0), BOX, 0.25, Configuration([[0.0]], 1)) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(coords, min_size=1, max_size=4), st.lists(coords, min_size=1, max_size=4), coords)
def test_local_energy_is_additive(a, c, x):
    spec = GibbsSpec(special("exp", modulation="cos", t=1.0, a=3.0), 1.0)
    ga = Configuration(np.array(a).reshape(-1, 1), 1)
    gc = Configuration(np.array(c).reshape(-1, 1), 1)
    ea, ec = local_energy(spec, BOX, x, ga), local_energy(spec, BOX, x, gc)
    if math.isfinite(ea) and math.isfinite(ec):
        assert local_energy(spec, BOX, x, ga.union(gc)) == pytest.approx(ea + ec, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(coords, min_size=1, max_size=4), coords, st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_papangelou_decreases_in_beta_for_repulsive(pts, x, b1, b2):
    g = Configuration(np.array(pts).reshape(-1, 1), 1)
    lo, hi = sorted((b1, b2))
    r_lo = papangelou(gauss_spec(beta=lo), BOX, x, g)
    r_hi = papangelou(gauss_spec(beta=hi), BOX, x, g)
    assert r_hi <= r_lo + 1e-15


def test_gibbs_spec_validation():
    with pytest.raises(ValueError):
        GibbsSpec(zero(1), 0.0)
    with pytest.raises(ValueError):
        GibbsSpec(zero(1), 1.0, -1.0)


# difference operators -----------------------------------------------------


def test_differences_of_linear_and_constant():
    F = linear()
    g = Configuration([[2.5], [6.0]], 1)
    psi = lambda x: float(F.profile_values([x])[0])  # noqa: E731
    assert d_minus(F, g, [2.5]) == pytest.approx(-psi(2.5))
    assert d_plus(F, g, [3.3]) == pytest.approx(-psi(3.3))
    const = CylinderFunction(BOX, (Bump((1.0,), 1.0),), Affine(4.0, (0.0,)))
    assert d_minus(const, g, [6.0]) == 0.0
    assert d_plus(const, g, [1.0]) == 0.0


def test_d_minus_requires_membership():
    with pytest.raises(KeyError):
        d_minus(linear(), Configuration([[1.0]], 1), [2.0])


def test_d_minus_of_square():
    F = CylinderFunction(BOX, (Bump((3.0,), 2.0),), Polynomial(0.0, (0.0,), ((1.0,),)))
    x, y = 2.5, 3.7
    g = Configuration([[x], [y]], 1)
    px, py = (float(F.profile_values([u])[0]) for u in (x, y))
    assert d_minus(F, g, [x]) == pytest.approx(py ** 2 - (px + py) ** 2, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_pivot_identity(seed, n):
    rng = np.random.default_rng(seed)
    F = random_cylinder(BOX, rng, n_profiles=int(rng.integers(1, 4)))
    g = Configuration(rng.uniform(0, 10, (n, 1)), 1)
    x = g.points[int(rng.integers(n))]
    assert abs(d_plus(F, g.remove(x), x) - d_minus(F, g, x)) <= 1e-13


# cylinder evaluation -------------------------------------------------------


def test_eval_cylinder_examples():
    F = CylinderFunction(BOX, (Bump((3.0,), 2.0),), Affine(2.5, (1.0,)))
    assert eval_cylinder(F, Configuration(None, 1)) == 2.5
    G = linear()
    psi = float(G.profile_values([3.4])[0])
    assert eval_cylinder(G, Configuration([[3.4]], 1)) == pytest.approx(psi)


def test_polynomial_matches_hand_evaluation():
    b1, b2 = Bump((2.0,), 1.5), Bump((8.0,), 2.0, kind="gauss")
    poly = Polynomial(0.5, (1.0, -2.0), ((1.0, 0.5), (0.5, -1.0)), (0.3, 0.1))
    F = CylinderFunction(BOX, (b1, b2), poly)
    pts = np.array([[1.5], [2.7], [9.1]])
    s1 = sum(float(b1(BOX, p)) for p in pts)
    s2 = sum(float(b2(BOX, p)) for p in pts)
    expected = 0.5 + s1 - 2 * s2 + s1 ** 2 + s1 * s2 - s2 ** 2 + 0.3 * s1 ** 3 + 0.1 * s2 ** 3
    assert eval_cylinder(F, Configuration(pts, 1)) == pytest.approx(expected, rel=1e-13)


def test_cylinder_needs_a_profile():
    with pytest.raises(ValueError):
        CylinderFunction(BOX, (), Affine(0.0, ()))

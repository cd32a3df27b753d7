import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphcap.ensemble import (HarmonicCoefficients, basis_matrix, evaluate_field, index_of, kernel, order_of,
                             sample_coefficient_matrix, sample_coefficients)
from sphcap.geometry import (Direction, cap_volume, from_angles, gauss_legendre, geodesic_distance, rotation_to,
                             sample_cap, to_angles, uniform_sphere)
from sphcap.rng import Seed
from sphcap.specfun import assoc_legendre_norm

unit_angles = st.tuples(st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi))


def random_directions(n, seed=0):
    return uniform_sphere(n, np.random.default_rng(seed))


# ------------------------------------------------------------ geometry, seeds

@settings(max_examples=100, deadline=None)
@given(unit_angles)
def test_direction_round_trip(angles):
    d = Direction(*angles)
    v = d.vector
    assert abs(np.linalg.norm(v) - 1) <= 1e-12
    back = Direction.from_vector(v)
    assert np.allclose(back.vector, v, atol=1e-12)


def test_direction_rejects_bad_colatitude():
    with pytest.raises(ValueError):
        Direction(-0.1, 0.0)
    with pytest.raises(ValueError):
        Direction(3.5, 0.0)


@settings(max_examples=50, deadline=None)
@given(unit_angles)
def test_rotation_takes_pole_to_direction(angles):
    d = Direction(*angles)
    rot = rotation_to(d)
    assert np.allclose(rot @ np.array([0.0, 0.0, 1.0]), d.vector, atol=1e-12)
    assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)


def test_cap_volume():
    assert cap_volume(math.pi) == pytest.approx(4 * math.pi)
    assert cap_volume(1e-4) == pytest.approx(math.pi * 1e-8, rel=1e-7)
    with pytest.raises(ValueError):
        cap_volume(0.0)
    with pytest.raises(ValueError):
        cap_volume(4.0)


def test_sample_cap_stays_inside_and_is_uniform():
    rng = np.random.default_rng(2)
    z = Direction(1.1, 2.0)
    pts = sample_cap(50_000, 0.3, rng, z)
    d = geodesic_distance(pts, z.vector)
    assert d.max() <= 0.3 + 1e-12
    # area-uniform: P(d < r/2) = sin^2(r/4) / sin^2(r/2)
    want = math.sin(0.075) ** 2 / math.sin(0.15) ** 2
    assert abs(np.mean(d < 0.15) - want) < 4 * math.sqrt(want * (1 - want) / 50_000)


def test_seed_streams():
    s = Seed(2024)
    a = s.child(3).generator().standard_normal(5)
    b = Seed(2024, (3,)).generator().standard_normal(5)
    c = s.child(4).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert str(s.child(1, 2)) == "2024:1:2"
    with pytest.raises(ValueError):
        Seed(-1)


# ------------------------------------------------------------ coefficients

def test_index_layout():
    assert index_of(0, "cos") == 0
    assert index_of(1, "cos") == 1 and index_of(1, "sin") == 2
    for k in range(41):
        assert index_of(*order_of(k)) == k
    with pytest.raises(ValueError):
        index_of(0, "sin")


def test_coefficient_validation():
    with pytest.raises(ValueError):
        HarmonicCoefficients(3, np.zeros(6))
    with pytest.raises(ValueError):
        HarmonicCoefficients(1, [0.0, np.nan, 1.0])


@pytest.mark.parametrize("m", [1, 10, 200])
def test_sample_length_and_determinism(m):
    a = sample_coefficients(m, Seed(9))
    b = sample_coefficients(m, Seed(9))
    assert a.c.shape == (2 * m + 1,)
    assert np.array_equal(a.c, b.c)
    with pytest.raises(ValueError):
        sample_coefficients(0, Seed(1))


def test_sample_variance():
    m = 50
    c = sample_coefficient_matrix(m, Seed(77), 10_000)
    v = c ** 2  # E = 1/(2m+1), var = 2/(2m+1)^2 per entry
    se = math.sqrt(2.0) / (2 * m + 1) / math.sqrt(v.size)
    assert abs(v.mean() - 1 / (2 * m + 1)) <= 4 * se


# ------------------------------------------------------------ fields and kernel

def test_zero_field():
    pts = random_directions(10)
    assert np.all(evaluate_field(HarmonicCoefficients.zeros(7), pts) == 0)


def test_unit_coefficients_extract_basis():
    m = 12
    pts = random_directions(30, 4)
    th, al = to_angles(pts)
    for j, par in ((0, "cos"), (3, "cos"), (3, "sin"), (12, "sin")):
        got = evaluate_field(HarmonicCoefficients.unit(m, j, par), pts)
        assert np.allclose(got, assoc_legendre_norm(m, j, par, th, al), atol=1e-12)


def test_single_direction_returns_float():
    c = sample_coefficients(5, Seed(1))
    assert isinstance(evaluate_field(c, Direction(0.4, 1.0)), float)


def test_field_second_moment():
    m = 50
    x = Direction(0.9, 4.0)
    row = basis_matrix(m, x)[0]
    c = sample_coefficient_matrix(m, Seed(5), 10_000)
    phi2 = (c @ row) ** 2
    se = phi2.std(ddof=1) / math.sqrt(phi2.size)
    assert abs(phi2.mean() - 1 / (4 * math.pi)) <= 4 * se


def test_variance_is_rotation_invariant():
    m = 30
    c = sample_coefficient_matrix(m, Seed(6), 10_000)
    v1 = (c @ basis_matrix(m, Direction(0.1, 0.0))[0]) ** 2
    v2 = (c @ basis_matrix(m, Direction(2.0, 3.0))[0]) ** 2
    se = math.hypot(v1.std(), v2.std()) / math.sqrt(v1.size)
    assert abs(v1.mean() - v2.mean()) <= 4 * se


def test_kernel_properties():
    m = 50
    x = random_directions(100, 1)
    y = random_directions(100, 2)
    k = kernel(m, x, y)
    assert np.all(np.abs(k) <= (2 * m + 1) / (4 * math.pi) + 1e-12)
    assert kernel(m, x[0], x[0]) == pytest.approx((2 * m + 1) / (4 * math.pi))
    explicit = np.sum(basis_matrix(m, x) * basis_matrix(m, y), axis=1)
    assert np.allclose(k, explicit, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(unit_angles, st.floats(0.0, math.pi))
def test_kernel_rotation_invariance(angles, theta):
    m = 17
    rot = rotation_to(Direction(*angles))
    x = from_angles(theta, 0.3)
    y = from_angles(0.2, 1.0)
    assert kernel(m, rot @ x, rot @ y) == pytest.approx(kernel(m, x, y), abs=1e-10)


def test_parseval():
    m = 40
    c = sample_coefficients(m, Seed(8))
    x, w = gauss_legendre(m + 1)
    n_a = 2 * m + 2
    tt, aa = np.meshgrid(np.arccos(x), 2 * math.pi * np.arange(n_a) / n_a, indexing="ij")
    vals = evaluate_field(c, from_angles(tt.ravel(), aa.ravel()))
    total = np.repeat(w, n_a) * (2 * math.pi / n_a) @ vals ** 2
    assert total == pytest.approx(float(c.c @ c.c), abs=1e-8)


def test_rotated_z_matches_rotated_field():
    m = 9
    c = sample_coefficients(m, Seed(3))
    g = 0.7
    pts = random_directions(20, 9)
    th, al = to_angles(pts)
    rotated = evaluate_field(c.rotated_z(g), from_angles(th, al + g))
    assert np.allclose(rotated, evaluate_field(c, pts), atol=1e-12)


def test_expected_cap_mass():
    m, r = 30, 0.5
    from sphcap.capmass import CapQuadrature, CapSpec

    q = CapQuadrature(CapSpec(m, r, Direction(1.0, 1.0)))
    c = sample_coefficient_matrix(m, Seed(10), 10_000)
    mass = q.average(c) * cap_volume(r)
    se = mass.std(ddof=1) / math.sqrt(mass.size)
    assert abs(mass.mean() - math.sin(r / 2) ** 2) <= 4 * se

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from lsicert.errors import DimensionMismatch, NotNormalizable, NotPositiveDefinite, SameIndex
from lsicert.model import (
    PotentialSpec,
    SinePerturbation,
    Variant,
    build_lattice,
    conditional,
    conditional_lsi_rho,
    grad_potential,
    lattice_index,
    mixed_partial,
    perturbed_quadratic,
    potential,
    quadratic,
)

from conftest import random_spd


def pert_spec(rng=None):
    M = np.array([[1.5, 0.2, 0.0], [0.2, 1.2, -0.1], [0.0, -0.1, 1.0]])
    return perturbed_quadratic(M, [(0, 0.1, 1.0), (1, -0.05, 2.0), (2, 0.2, 0.5), (0, 0.03, 3.0)])


# ---------------------------------------------------------------- lattice


def test_lattice_single_node():
    spec = build_lattice([1], J=5.0, h=2.0)
    assert spec.variant is Variant.LATTICE
    np.testing.assert_array_equal(spec.precision, [[2.0]])


def test_lattice_chain_of_two():
    spec = build_lattice([2], J=0.3, h=1.0)
    np.testing.assert_array_equal(spec.precision, [[1.0, 0.3], [0.3, 1.0]])


def test_lattice_2x2_adjacency_bruteforce():
    spec = build_lattice([2, 2], J=0.1, h=1.0)
    nodes = [(a, b) for a in range(2) for b in range(2)]  # lexicographic
    expected = np.eye(4)
    for i, u in enumerate(nodes):
        for k, v in enumerate(nodes):
            if sum(abs(x - y) for x, y in zip(u, v)) == 1:
                expected[i, k] = 0.1
    np.testing.assert_array_equal(spec.precision, expected)
    assert spec.precision[0, 3] == 0 and spec.precision[1, 2] == 0
    assert np.count_nonzero(np.triu(spec.precision, 1)) == 4


def test_lattice_3d_edge_count():
    dims = (2, 3, 2)
    spec = build_lattice(dims, J=-0.05, h=1.0)
    edges = sum((d - 1) * int(np.prod(dims)) // d for d in dims)
    assert np.count_nonzero(np.triu(spec.precision, 1)) == edges
    assert lattice_index(dims, (1, 2, 1)) == 11


def test_lattice_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        build_lattice([3], J=1.0, h=1.0)


def test_lattice_bad_dims():
    with pytest.raises(ValueError):
        build_lattice([0, 2], J=0.1, h=1.0)


# ------------------------------------------------------------ validation


def test_spec_rejects_asymmetric():
    with pytest.raises(ValueError):
        quadratic([[1.0, 0.1], [0.2, 1.0]])


def test_spec_rejects_indefinite_quadratic():
    with pytest.raises(NotPositiveDefinite):
        quadratic([[1.0, 2.0], [2.0, 1.0]])


def test_perturbed_allows_indefinite_precision_but_not_nonpositive_diagonal():
    spec = perturbed_quadratic([[1.0, 2.0], [2.0, 1.0]], [])
    assert spec.n == 2
    bad = perturbed_quadratic([[0.0, 0.1], [0.1, 1.0]], [(0, 0.1, 1.0)])
    with pytest.raises(NotNormalizable):
        conditional(bad, 0, [0.0])


def test_perturbations_only_on_perturbed_variant():
    with pytest.raises(ValueError):
        PotentialSpec(Variant.QUADRATIC, np.eye(2), (SinePerturbation(0, 0.1),))


def test_perturbation_site_range():
    with pytest.raises(DimensionMismatch):
        perturbed_quadratic(np.eye(2), [(2, 0.1, 1.0)])


def test_sine_bounds():
    p = SinePerturbation(0, -0.2, 3.0)
    assert (p.sup_abs, p.sup_d1, p.sup_d2) == pytest.approx((0.2, 0.6, 1.8))
    xs = np.linspace(-10, 10, 20001)
    assert np.abs(p.value(xs)).max() <= p.sup_abs + 1e-15
    assert np.abs(p.d1(xs)).max() <= p.sup_d1 + 1e-15
    assert np.abs(p.d2(xs)).max() <= p.sup_d2 + 1e-15


# ----------------------------------------------------------- derivatives


def test_grad_at_minimum():
    np.testing.assert_array_equal(grad_potential(quadratic(np.eye(3)), np.zeros(3)), np.zeros(3))


def test_grad_hand_example(M2):
    np.testing.assert_allclose(grad_potential(quadratic(M2), [1.0, 1.0]), [1.2, 1.2], rtol=0, atol=1e-15)


def test_grad_dimension_mismatch(M2):
    with pytest.raises(DimensionMismatch):
        grad_potential(quadratic(M2), [1.0, 2.0, 3.0])


def _fd_grad(spec, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (potential(spec, x + e) - potential(spec, x - e)) / (2 * h)
    return g


def test_grad_matches_finite_differences(rng):
    specs = [quadratic(random_spd(rng, 4)), pert_spec(), build_lattice([2, 2], 0.1, 1.0)]
    for spec in specs:
        for _ in range(100):
            x = rng.normal(scale=2.0, size=spec.n)
            g = grad_potential(spec, x)
            fd = _fd_grad(spec, x)
            assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_potential_broadcasts(rng):
    spec = pert_spec()
    xs = rng.normal(size=(5, 7, 3))
    v = potential(spec, xs)
    assert v.shape == (5, 7)
    assert v[2, 3] == pytest.approx(float(potential(spec, xs[2, 3])), rel=1e-14)


def test_mixed_partial_quadratic(M2):
    spec = quadratic(M2)
    assert mixed_partial(spec, 0, 1, [3.0, -2.0]) == 0.2


def test_mixed_partial_perturbed_off_diagonal():
    spec = pert_spec()
    assert mixed_partial(spec, 1, 2, [0.3, 0.1, 2.0]) == -0.1
    assert mixed_partial(spec, 0, 2, [0.3, 0.1, 2.0]) == 0.0


def test_mixed_partial_same_index(M2):
    with pytest.raises(SameIndex):
        mixed_partial(quadratic(M2), 1, 1, [0.0, 0.0])


def test_mixed_partial_finite_differences(rng):
    spec = pert_spec()
    h = 1e-4
    for _ in range(30):
        x = rng.normal(size=3)
        for i in range(3):
            for k in range(3):
                if i == k:
                    continue
                ei = np.eye(3)[i] * h
                ek = np.eye(3)[k] * h
                fd = (
                    potential(spec, x + ei + ek)
                    - potential(spec, x + ei - ek)
                    - potential(spec, x - ei + ek)
                    + potential(spec, x - ei - ek)
                ) / (4 * h * h)
                assert mixed_partial(spec, i, k, x) == pytest.approx(fd, abs=1e-5)
                assert mixed_partial(spec, i, k, x) == mixed_partial(spec, k, i, x)


# ----------------------------------------------------------- conditionals


def test_conditional_independent_sites():
    c = conditional(quadratic(np.eye(3)), 1, [5.0, -7.0])
    assert c.is_gaussian
    assert (c.mean, c.variance) == (0.0, 1.0)


def test_conditional_complete_the_square(M2):
    c = conditional(quadratic(M2), 0, [2.0])
    assert c.mean == pytest.approx(-0.4, abs=1e-15)
    assert c.variance == 1.0


def test_conditional_gaussian_normalizer_matches_quadrature(M2):
    c = conditional(quadratic(M2), 1, [1.3])
    val, _ = integrate.quad(lambda t: math.exp(float(c.logdensity(t))), -30, 30, epsabs=0, epsrel=1e-13)
    assert c.log_normalizer() == pytest.approx(math.log(val), abs=1e-12)


def test_conditional_perturbed_mass():
    spec = perturbed_quadratic(np.eye(2), [(0, 0.1, 1.0)])
    c = conditional(spec, 0, [0.7])
    assert not c.is_gaussian
    xs = np.linspace(-12, 12, 24001)
    expected_log = -0.5 * xs**2 - 0.1 * np.sin(xs)
    np.testing.assert_allclose(c.logdensity(xs), expected_log, atol=1e-12)
    mass = integrate.trapezoid(c.pdf(xs), xs)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_conditional_differs_from_minus_v_by_constant(rng):
    spec = pert_spec()
    for i in range(3):
        x = rng.normal(size=3)
        xbar = np.delete(x, i)
        c = conditional(spec, i, xbar)
        xi = np.linspace(-4, 4, 41)
        pts = np.repeat(x[None, :], xi.size, axis=0)
        pts[:, i] = xi
        diff = c.logdensity(xi) + potential(spec, pts)
        assert np.ptp(diff) < 1e-9


def test_conditional_shape_errors(M2):
    with pytest.raises(DimensionMismatch):
        conditional(quadratic(M2), 0, [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        conditional(quadratic(M2), 2, [1.0])


# ------------------------------------------------------------------ rho


def test_rho_unperturbed_identity():
    spec = quadratic(np.eye(3))
    assert [conditional_lsi_rho(spec, i) for i in range(3)] == [1.0, 1.0, 1.0]


def test_rho_perturbed_value():
    spec = perturbed_quadratic([[2.0, 0.0], [0.0, 1.0]], [(0, 0.1, 1.0)])
    assert conditional_lsi_rho(spec, 0) == pytest.approx(2 * math.exp(-0.4), rel=1e-15)
    assert conditional_lsi_rho(spec, 0) == pytest.approx(1.3406400920712788, rel=1e-12)
    assert conditional_lsi_rho(spec, 1) == 1.0


@given(a=st.floats(0, 2), b=st.floats(0, 2), c=st.floats(0.1, 5))
def test_rho_monotone_in_perturbation(a, b, c):
    lo, hi = sorted((a, b))
    s_lo = perturbed_quadratic([[c]], [(0, lo, 1.0)])
    s_hi = perturbed_quadratic([[c]], [(0, hi, 1.0)])
    assert conditional_lsi_rho(s_hi, 0) <= conditional_lsi_rho(s_lo, 0)


def test_scaled_spec():
    spec = pert_spec().scaled(2.0)
    np.testing.assert_allclose(spec.precision, 2 * pert_spec().precision)
    assert spec.perturbations[0].a == pytest.approx(0.2)

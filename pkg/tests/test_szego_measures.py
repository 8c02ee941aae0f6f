"""Agreement of the three limit-functional representations."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeemanlab.szego_measures import (
    AngleState,
    HaarGrid,
    TestFunction,
    beta_marginalization_gap,
    haar_density_normalization,
    limit_angle_density,
    limit_quadric_mc,
    limit_triangular,
    liouville_pushforward_check,
)
from zeemanlab.classical_kepler import kepler_constants, orbit_point_from_elements


def brute_force_triangular(rho, B, n=4000001):
    u = np.linspace(-1.0, 1.0, n)
    return float(np.trapezoid(rho(-(B / 2.0) * u) * (1.0 - np.abs(u)), u))


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


def test_testfunction_kinds():
    assert TestFunction.monomial(0)(np.array([3.0]))[0] == 1.0
    assert TestFunction.monomial(3)(np.array([2.0]))[0] == 8.0
    poly = TestFunction.polynomial([1.0, 0.0, 2.0])
    assert poly(np.array([2.0]))[0] == 9.0
    tab = TestFunction.tabulated([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    assert tab(np.array([0.5]))[0] == pytest.approx(0.5)


def test_testfunction_validation():
    with pytest.raises(ValueError):
        TestFunction.monomial(13)
    with pytest.raises(ValueError):
        TestFunction.polynomial([])
    with pytest.raises(ValueError):
        TestFunction.tabulated([0.0, 0.0], [1.0, 1.0])


def test_angle_state_validation_and_ell3():
    state = AngleState(psi=0.4, theta=1.0, phi=0.1, gamma=5.0, beta=2.0)
    assert state.ell3 == pytest.approx(np.cos(0.4) * np.cos(1.0))
    with pytest.raises(ValueError):
        AngleState(psi=2.0, theta=1.0, phi=0.0, gamma=0.0, beta=0.0)


def test_angle_state_links_to_orbit_geometry():
    state = AngleState(psi=0.7, theta=2.0, phi=1.2, gamma=0.3, beta=4.0)
    pt = orbit_point_from_elements(state.to_orbit_elements())
    _, ell, _ = kepler_constants(pt)
    assert ell[2] == pytest.approx(state.ell3, abs=1e-12)


# ---------------------------------------------------------------------------
# triangular representation
# ---------------------------------------------------------------------------


def test_triangular_constant_normalized():
    assert limit_triangular(TestFunction.monomial(0), 1.0) == pytest.approx(1.0, abs=1e-13)


def test_triangular_odd_vanishes():
    assert limit_triangular(TestFunction.monomial(1), 2.0) == pytest.approx(0.0, abs=1e-13)


def test_triangular_square_value():
    got = limit_triangular(TestFunction.monomial(2), 2.0)
    assert got == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert got == pytest.approx(
        brute_force_triangular(TestFunction.monomial(2), 2.0), abs=1e-9
    )


def test_triangular_scaling_invariance():
    # scaling B by c equals evaluating rho(c x) at the original B, exactly
    rho = TestFunction.polynomial([0.3, -0.2, 1.0, 0.5])
    c = 2.5
    scaled_field = limit_triangular(rho, c * 1.2)
    scaled_rho = limit_triangular(lambda x: rho(c * x), 1.2)
    assert scaled_field == pytest.approx(scaled_rho, abs=1e-10)


def test_all_representations_vanish_outside_support():
    B = 1.0
    bump = TestFunction.tabulated(
        [-10.0, -2.0, -1.0, -0.6, 0.6, 1.0, 2.0, 10.0],
        [0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
    )
    assert limit_triangular(bump, B) == pytest.approx(0.0, abs=1e-12)
    assert limit_angle_density(bump, B) == pytest.approx(0.0, abs=1e-10)
    mc = limit_quadric_mc(bump, B, 50000, np.random.default_rng(1))
    assert mc.value == 0.0 and mc.std_error == 0.0


# ---------------------------------------------------------------------------
# angle-density representation
# ---------------------------------------------------------------------------


def test_angle_density_constant_normalized():
    assert limit_angle_density(TestFunction.monomial(0), 1.0) == pytest.approx(
        1.0, abs=1e-10
    )


def test_angle_density_square_value():
    assert limit_angle_density(TestFunction.monomial(2), 2.0) == pytest.approx(
        1.0 / 6.0, abs=1e-8
    )


@given(st.integers(min_value=0, max_value=6))
@settings(deadline=None, max_examples=7)
def test_angle_density_matches_triangular_monomials(degree):
    rho = TestFunction.monomial(degree)
    for B in (0.5, 1.0, 2.0):
        assert limit_angle_density(rho, B) == pytest.approx(
            limit_triangular(rho, B), abs=1e-8
        )


def test_angle_density_matches_triangular_random_polynomials():
    rng = np.random.default_rng(17)
    for _ in range(5):
        rho = TestFunction.polynomial(rng.standard_normal(7))
        for B in (0.5, 1.0, 2.0):
            assert limit_angle_density(rho, B) == pytest.approx(
                limit_triangular(rho, B), abs=1e-8
            )


# ---------------------------------------------------------------------------
# Monte-Carlo representation
# ---------------------------------------------------------------------------


def test_mc_constant_exact():
    out = limit_quadric_mc(TestFunction.monomial(0), 1.0, 2000, np.random.default_rng(0))
    assert out.value == 1.0
    assert out.std_error == 0.0


def test_mc_square_within_three_sigma():
    out = limit_quadric_mc(
        TestFunction.monomial(2), 2.0, 1000000, np.random.default_rng(21)
    )
    assert abs(out.value - 1.0 / 6.0) <= 3.0 * out.std_error


def test_mc_odd_within_three_sigma():
    out = limit_quadric_mc(
        TestFunction.monomial(1), 2.0, 1000000, np.random.default_rng(22)
    )
    assert abs(out.value) <= 3.0 * out.std_error


def test_mc_agrees_with_quadratures_random_polynomials():
    rng = np.random.default_rng(30)
    for _ in range(5):
        rho = TestFunction.polynomial(rng.standard_normal(5))
        ref = limit_triangular(rho, 1.0)
        out = limit_quadric_mc(rho, 1.0, 200000, rng)
        assert abs(out.value - ref) <= 4.0 * out.std_error + 1e-12


# ---------------------------------------------------------------------------
# pushforward and group-measure identities
# ---------------------------------------------------------------------------


def test_liouville_pushforward():
    n = 1000000
    check = liouville_pushforward_check(n, np.random.default_rng(11))
    assert check.max_pointwise_gap <= 1e-9
    # pointwise agreement pins the sample law up to float ties
    assert check.ks_vs_index_law <= 3.0 / n
    assert check.ks_vs_triangular <= 0.005
    assert check.skipped_fraction <= 1e-6


def test_haar_normalization_default_grid():
    assert haar_density_normalization() == pytest.approx(1.0, abs=1e-6)


def test_haar_normalization_stable_under_refinement():
    coarse = haar_density_normalization(HaarGrid())
    fine = haar_density_normalization(HaarGrid().doubled())
    assert abs(coarse - fine) <= 1e-6


def test_haar_density_nonnegative():
    psi = np.linspace(1e-3, np.pi / 2 - 1e-3, 200)
    beta = np.linspace(0, 2 * np.pi, 200)
    denom = 1.0 + np.sin(psi)[:, None] * np.cos(beta)[None, :]
    assert np.all(denom > 0.0)


def test_beta_marginalization_identity():
    assert beta_marginalization_gap() <= 1e-8

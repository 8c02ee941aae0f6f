"""Cluster spectra, scaled-shift laws, trace averages, and KS machinery."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeemanlab.hydrogenic_shell import ScalingSchedule, shell_matrix_L3
from zeemanlab.spectral_cluster import (
    ClusterSeparationError,
    EmpiricalMeasure,
    SubclusterOverlapError,
    cluster_eigenvalues,
    ks_distance,
    ks_two_sample,
    riemann_sum_limit,
    scaled_shift_measure,
    subcluster_assignment,
    trace_average,
    triangular_shift_cdf,
)


def _para_schedule(B=1.0, q=17.0):
    return ScalingSchedule(B=B, q=q, include_diamagnetic=False)


# ---------------------------------------------------------------------------
# cluster_eigenvalues
# ---------------------------------------------------------------------------


def test_zero_field_shifts_vanish():
    spec = cluster_eigenvalues(3, ScalingSchedule(B=0.0))
    assert np.all(spec.shifts == 0.0)


def test_paramagnetic_ladder_is_exact():
    N, B = 4, 1.5
    sched = _para_schedule(B=B)
    spec = cluster_eigenvalues(N, sched)
    lam = sched.lam(N)
    expected = np.sort(
        np.concatenate(
            [np.full(N + 1 - abs(m), -0.5 * lam * m) for m in range(-N, N + 1)]
        )
    )
    assert np.array_equal(np.sort(spec.shifts), expected)


def test_scaled_shifts_supported_in_reported_interval():
    N, B = 12, 2.0
    sched = ScalingSchedule(B=B, q=17.0)
    spec = cluster_eigenvalues(N, sched)
    bound = B / 2.0 + spec.diamagnetic_slack + 1e-12
    assert np.max(np.abs(spec.scaled_shifts)) <= bound


def test_shift_multiset_symmetric_without_diamagnetic_term():
    spec = cluster_eigenvalues(6, _para_schedule(B=1.0))
    assert np.array_equal(np.sort(spec.shifts), np.sort(-spec.shifts))


def test_first_order_vs_multishell_default_schedule():
    N = 20
    sched = ScalingSchedule(B=1.0, q=17.0)
    first = cluster_eigenvalues(N, sched, mode="first_order")
    multi = cluster_eigenvalues(N, sched, mode="multishell", delta=2)
    tol = 1e-3 * sched.shift_scale(N)
    assert np.max(np.abs(first.shifts - multi.shifts)) <= tol


def test_first_order_vs_multishell_visible_coupling():
    # q=2 makes the diamagnetic term numerically alive; the band result
    # differs only by second-order shell mixing, well under tolerance
    N = 10
    sched = ScalingSchedule(B=1.0, q=2.0)
    first = cluster_eigenvalues(N, sched, mode="first_order")
    multi = cluster_eigenvalues(N, sched, mode="multishell", delta=2)
    gap = np.max(np.abs(first.shifts - multi.shifts))
    assert 0.0 < gap <= 1e-3 * sched.shift_scale(N)


def test_multishell_counts_cluster():
    spec = cluster_eigenvalues(8, ScalingSchedule(B=1.0, q=17.0), mode="multishell")
    assert len(spec.shifts) == 81


def test_multishell_separation_failure_raises():
    # an enormous field at a low exponent pushes eigenvalues out of the circle
    sched = ScalingSchedule(B=5e4, q=0.1)
    with pytest.raises(ClusterSeparationError):
        cluster_eigenvalues(2, sched, mode="multishell", delta=1)


def test_cluster_requires_positive_N():
    with pytest.raises(ValueError):
        cluster_eigenvalues(0, ScalingSchedule(B=1.0))


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        cluster_eigenvalues(2, ScalingSchedule(B=1.0), mode="exact")


# ---------------------------------------------------------------------------
# scaled shift measure
# ---------------------------------------------------------------------------


def test_scaled_measure_n1_atoms():
    spec = cluster_eigenvalues(1, _para_schedule(B=2.0))
    measure = scaled_shift_measure(spec)
    assert np.allclose(np.sort(measure.values), [-0.5, 0.0, 0.0, 0.5], atol=1e-15)
    assert np.allclose(measure.weights, 0.25)


def test_scaled_measure_zero_field_point_mass():
    spec = cluster_eigenvalues(3, ScalingSchedule(B=0.0))
    measure = scaled_shift_measure(spec)
    assert np.all(measure.values == 0.0)
    assert measure.weights.sum() == pytest.approx(1.0, abs=1e-15)


@given(st.integers(min_value=1, max_value=12))
@settings(deadline=None, max_examples=8)
def test_scaled_measure_normalized(N):
    spec = cluster_eigenvalues(N, _para_schedule(B=1.0))
    measure = scaled_shift_measure(spec)
    assert measure.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_empirical_measure_validation():
    with pytest.raises(ValueError):
        EmpiricalMeasure(values=np.array([0.0]), weights=np.array([0.5]))
    with pytest.raises(ValueError):
        EmpiricalMeasure(values=np.array([0.0, 1.0]), weights=np.array([1.5, -0.5]))


# ---------------------------------------------------------------------------
# subcluster assignment
# ---------------------------------------------------------------------------


def test_subcluster_sizes_small_shell():
    spec = cluster_eigenvalues(2, ScalingSchedule(B=1.0, q=17.0))
    sizes = {m: len(v) for m, v in subcluster_assignment(spec).items()}
    assert sizes == {-2: 1, -1: 2, 0: 3, 1: 2, 2: 1}


def test_subcluster_distances_without_diamagnetic_term():
    spec = cluster_eigenvalues(5, _para_schedule(B=1.0))
    assignment = subcluster_assignment(spec)
    for m, shifts in assignment.items():
        center = -(1.0 / 2.0) * m / 6.0
        # one rounding step comes from rescaling the raw shifts
        assert np.max(np.abs(shifts - center)) <= 1e-15


def test_subcluster_center_distance_default_schedule():
    N, B = 20, 1.0
    spec = cluster_eigenvalues(N, ScalingSchedule(B=B, q=17.0))
    assignment = subcluster_assignment(spec)
    worst = max(
        np.max(np.abs(np.asarray(v) - (-(B / 2.0) * m / (N + 1))))
        for m, v in assignment.items()
        if len(v)
    )
    assert worst <= 1e-6 * B


def test_subcluster_overlap_error_reports_distance():
    spec = cluster_eigenvalues(2, _para_schedule(B=1.0))
    # corrupt one scaled shift so it lands midway between two centers
    spec.scaled_shifts[0] = spec.scaled_shifts[0] + 1.0 / 12.0
    with pytest.raises(SubclusterOverlapError) as err:
        subcluster_assignment(spec)
    assert err.value.distance >= err.value.allowed


def test_subcluster_needs_positive_field():
    spec = cluster_eigenvalues(2, ScalingSchedule(B=0.0))
    with pytest.raises(ValueError):
        subcluster_assignment(spec)


# ---------------------------------------------------------------------------
# trace averages and Riemann sums
# ---------------------------------------------------------------------------


def test_trace_average_constant_is_one():
    assert trace_average(17, 1.3, lambda x: 1.0) == pytest.approx(1.0, abs=1e-14)


def test_trace_average_odd_vanishes():
    assert trace_average(23, 2.0, lambda x: x) == pytest.approx(0.0, abs=1e-14)


def test_trace_average_square_limit():
    # closed value N(N+2)/(6(N+1)^2) at B=2 converges to 1/6
    for N in (50, 400):
        got = trace_average(N, 2.0, lambda x: x * x)
        assert got == pytest.approx(N * (N + 2) / (6.0 * (N + 1) ** 2), rel=1e-12)
    assert trace_average(4000, 2.0, lambda x: x * x) == pytest.approx(1.0 / 6.0, abs=1e-5)


def test_trace_average_square_vs_quadrature_oracle():
    u = np.linspace(-1.0, 1.0, 200001)
    oracle = np.trapezoid(u * u * (1.0 - np.abs(u)), u)
    assert trace_average(2000, 2.0, lambda x: x * x) == pytest.approx(oracle, abs=1e-6)


def test_trace_identity_against_matrix_functional_calculus():
    # trace_average must reproduce (1/d_N) Tr Q(-(B/2) h L3) for polynomials
    N, B = 9, 1.7
    ell3 = np.concatenate(
        [np.diag(b) for _, b in sorted(shell_matrix_L3(N).blocks.items())]
    )
    eigs = -(B / 2.0) / (N + 1) * ell3
    rng = np.random.default_rng(1)
    for _ in range(5):
        coeffs = rng.standard_normal(7)
        poly = np.polynomial.Polynomial(coeffs)
        by_trace = float(np.mean(poly(eigs)))
        by_formula = trace_average(N, B, poly)
        assert by_formula == pytest.approx(by_trace, rel=1e-10, abs=1e-12)


def test_riemann_sum_constant():
    assert riemann_sum_limit(100, 1.0, lambda x: 1.0) == pytest.approx(1.0, abs=1e-2)


def test_riemann_sum_odd_boundary():
    N, B = 30, 2.0
    assert abs(riemann_sum_limit(N, B, lambda x: x)) <= (B / 2.0) / (N + 1)


def test_riemann_sum_agrees_with_trace_average():
    N, B = 75, 1.0
    rho = lambda x: np.cos(3.0 * x)
    assert riemann_sum_limit(N, B, rho) == pytest.approx(
        trace_average(N, B, rho), abs=10.0 / N
    )


@given(
    st.lists(st.floats(min_value=-2, max_value=2, allow_nan=False), min_size=1, max_size=6),
    st.integers(min_value=1, max_value=60),
)
@settings(deadline=None, max_examples=40)
def test_riemann_sum_is_trace_average_for_polynomials(coeffs, N):
    # the two sums are algebraically identical: the extra Riemann term
    # carries weight zero and the remaining weights match term by term
    poly = np.polynomial.Polynomial(coeffs)
    a = trace_average(N, 1.3, poly)
    b = riemann_sum_limit(N, 1.3, poly)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov distances
# ---------------------------------------------------------------------------


def test_ks_identical_discrete_measures_is_zero():
    values = np.array([-0.5, 0.0, 0.25])
    weights = np.array([0.25, 0.5, 0.25])
    emp = EmpiricalMeasure(values=values, weights=weights)

    def ref(x):
        return emp.cdf(x)

    def ref_left(x):
        return emp.cdf(np.asarray(x) - 1e-12)

    assert ks_distance(emp, ref, ref_left) == 0.0


def test_ks_point_mass_vs_triangular_is_half():
    emp = EmpiricalMeasure(values=np.array([0.0]), weights=np.array([1.0]))
    assert ks_distance(emp, triangular_shift_cdf(1.0)) == pytest.approx(0.5, abs=1e-15)


def test_ks_paramagnetic_law_close_to_triangular():
    N = 200
    spec = cluster_eigenvalues(N, _para_schedule(B=1.0))
    d = ks_distance(scaled_shift_measure(spec), triangular_shift_cdf(1.0))
    assert d <= 1.0 / (N + 1) + 1e-12


def test_ks_bounds():
    emp = EmpiricalMeasure(values=np.array([5.0]), weights=np.array([1.0]))
    assert ks_distance(emp, triangular_shift_cdf(1.0)) == pytest.approx(1.0)


@given(
    st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False), min_size=1, max_size=20)
)
@settings(deadline=None, max_examples=25)
def test_ks_in_unit_interval(xs):
    n = len(xs)
    emp = EmpiricalMeasure(values=np.array(xs), weights=np.full(n, 1.0 / n))
    d = ks_distance(emp, triangular_shift_cdf(2.0))
    assert 0.0 <= d <= 1.0


def test_ks_two_sample_identical_and_disjoint():
    a = np.array([0.0, 1.0, 2.0])
    assert ks_two_sample(a, a.copy()) == 0.0
    assert ks_two_sample(a, a + 10.0) == 1.0


def test_triangular_cdf_zero_field_degenerates():
    cdf = triangular_shift_cdf(0.0)
    assert cdf(np.array([-1e-9]))[0] == 0.0
    assert cdf(np.array([0.0]))[0] == 1.0


def test_triangular_cdf_symmetry():
    cdf = triangular_shift_cdf(1.0)
    xs = np.linspace(-0.5, 0.5, 101)
    assert np.allclose(cdf(xs) + cdf(-xs), 1.0, atol=1e-14)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbital_beta.bessel import (
    ContourSpec,
    bessel_contour_m1,
    bessel_mc,
    bessel_n2_closed,
    bessel_quadrature_small,
    bessel_theta0,
    contour_log_bessel_m1,
    pieri_check_m1,
    recentre_labels,
)
from orbital_beta.core import DomainError, NumericError, OrderedTuple, PreconditionError
from orbital_beta.sampling import SamplerConfig, make_rng

from conftest import labels


# --- quadrature oracle ------------------------------------------------------


def test_oracle_single_label_is_exponential():
    assert bessel_quadrature_small([2.0], [0.5], 1.3) == pytest.approx(math.e, rel=1e-15)


@pytest.mark.parametrize("t", [-2.0, 0.3, 1.0, 4.0])
def test_oracle_uniform_level(t):
    # theta = 1: level 1 is uniform on (0, 1)
    assert bessel_quadrature_small([1.0, 0.0], [t, 0.0], 1.0).real == pytest.approx(math.expm1(t) / t, rel=1e-10)


@pytest.mark.parametrize("a", [[1.0, 0.0], [2.0, 0.5, -1.0]])
@pytest.mark.parametrize("theta", [0.5, 2.0])
def test_oracle_at_zero_is_one(a, theta):
    assert bessel_quadrature_small(a, [0.0] * len(a), theta) == 1.0


def test_oracle_rejects_large_n():
    with pytest.raises(PreconditionError):
        bessel_quadrature_small([3.0, 2.0, 1.0, 0.0], [0.1], 1.0)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.7])
def test_n2_closed_form_matches_oracle(theta):
    a, y = [1.3, -0.4], [0.9, -0.6]
    assert bessel_n2_closed(a, y, theta) == pytest.approx(bessel_quadrature_small(a, y, theta).real, rel=1e-10)


def test_oracle_n3_against_mc():
    a, y, theta = [1.0, 0.2, -0.7], [0.8, -0.3, 0.4], 0.5
    ref = bessel_quadrature_small(a, y, theta).real
    est = bessel_mc(a, y, theta, rng=make_rng(11), draws=40_000)
    assert abs(est.mean - ref) <= 3 * est.stderr


# --- invariants ---------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.5, 1.0, 3.0])
def test_modulus_bound_on_grid(theta):
    a = [1.0, -0.5]
    for re1, re2, im1, im2 in itertools.product([-1.0, 0.7], [0.0, 1.2], [-2.0, 0.5], [0.0, 3.0]):
        z = bessel_quadrature_small(a, [complex(re1, im1), complex(re2, im2)], theta)
        bound = bessel_quadrature_small(a, [re1, re2], theta).real
        assert abs(z) <= bound * (1 + 1e-10)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_argument_symmetry_n2(theta):
    a, y = [0.8, -1.1], [1.4, -0.3]
    v = bessel_quadrature_small(a, y, theta)
    w = bessel_quadrature_small(a, y[::-1], theta)
    assert abs(v - w) <= 1e-10 * abs(v)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_argument_symmetry_n3(theta):
    a, y = [1.0, 0.1, -0.8], [0.6, -0.4, 0.9]
    vals = [bessel_quadrature_small(a, list(p), theta) for p in itertools.permutations(y)]
    assert max(abs(v - vals[0]) for v in vals) <= 1e-10 * abs(vals[0])


# --- Monte Carlo ----------------------------------------------------------------


def test_mc_imaginary_arguments_bounded():
    est = bessel_mc([2.0, 0.5, -0.3, -1.0], [3j, -1.5j], 0.7, rng=make_rng(4), draws=20_000)
    assert abs(est.mean) <= 1 + 3 * est.stderr


def test_mc_matches_oracle_n2():
    a, y, theta = [1.0, 0.0], [0.7, 0.2], 0.5
    est = bessel_mc(a, y, theta, rng=make_rng(5), draws=40_000)
    assert abs(est.mean - bessel_quadrature_small(a, y, theta).real) <= 3 * est.stderr


def test_mc_shift_identity():
    a = np.array([1.5, 0.4, -0.2, -1.0])
    y, theta, r = [0.6, -0.3], 1.5, 0.5
    # independent streams; each level-sum increment moves by r
    base = bessel_mc(a, y, theta, rng=make_rng(6), draws=40_000)
    shifted = bessel_mc(a + r, y, theta, rng=make_rng(7), draws=40_000)
    factor = math.exp(r * sum(y))
    diff = shifted.mean - factor * base.mean
    se = math.hypot(shifted.stderr, factor * base.stderr)
    assert abs(diff) <= 3 * se


def test_mc_rejects_too_many_arguments():
    with pytest.raises(DomainError):
        bessel_mc([1.0, 0.0], [0.1, 0.2, 0.3], 1.0, draws=10)


# --- contour -------------------------------------------------------------------


def test_contour_uniform_case():
    assert bessel_contour_m1([1.0, 0.0], 1.0, 1.0).real == pytest.approx(math.e - 1, rel=1e-10)


def test_contour_n3_matches_oracle():
    a = [1.0, 0.0, -1.0]
    assert bessel_contour_m1(a, 0.5, 1.0).real == pytest.approx(bessel_quadrature_small(a, [0.5], 1.0).real, rel=1e-6)


@pytest.mark.parametrize("y", [-2.5, -0.4, 0.8, 3.0])
@pytest.mark.parametrize("theta", [0.6, 1.0, 2.5])
def test_contour_matches_oracle_both_signs(y, theta):
    a = [1.2, 0.3, -0.9]
    ref = bessel_quadrature_small(a, [y], theta).real
    assert bessel_contour_m1(a, y, theta).real == pytest.approx(ref, rel=1e-6)


def test_contour_complex_argument_matches_oracle():
    a, y, theta = [1.0, -0.5], 0.7 - 1.3j, 1.5
    ref = bessel_quadrature_small(a, [y], theta)
    assert abs(bessel_contour_m1(a, y, theta) - ref) <= 1e-8 * abs(ref)


def test_contour_scale_identity():
    a, y, c, theta = np.array([1.0, 0.2, -0.6]), 0.7, 2.0, 2.0
    lhs = bessel_contour_m1(c * a, y, theta)
    rhs = bessel_contour_m1(a, c * y, theta)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_contour_shift_identity():
    a, y, r, theta = np.array([2.0, 0.5, -0.1, -1.3]), -0.9, 0.5, 0.8
    lhs = bessel_contour_m1(a + r, y, theta)
    rhs = math.exp(r * y) * bessel_contour_m1(a, y, theta)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_contour_fixed_rule_and_explicit_line():
    a = [1.0, 0.0, -1.0]
    ref = bessel_quadrature_small(a, [0.5], 2.0).real
    fixed = bessel_contour_m1(a, 0.5, 2.0, ContourSpec(M=4.0, T=300.0, nodes=4000, rule="fixed_gauss"), max_rel_error=1e-4)
    assert fixed.real == pytest.approx(ref, rel=1e-6)
    res = contour_log_bessel_m1(a, 0.5, 2.0, ContourSpec(M=3.0))
    assert res.M == 3.0 and res.value.real == pytest.approx(ref, rel=1e-8)


def test_contour_preconditions():
    with pytest.raises(PreconditionError):
        bessel_contour_m1([1.0, 0.0], 1.0, 0.5)
    with pytest.raises(PreconditionError):
        bessel_contour_m1([1.0, 0.0, -1.0], 2j, 1.0)
    with pytest.raises(PreconditionError):
        bessel_contour_m1([1.0, 0.0, -1.0], 1.0, 1.0, ContourSpec(M=0.5))
    with pytest.raises(ValueError):
        ContourSpec(T=-1.0)


def test_contour_flags_cancellation():
    a = np.linspace(1.0, -1.0, 400) * 400
    with pytest.raises(NumericError):
        bessel_contour_m1(a / 20, -1 + 2j, 1.0)


@pytest.mark.parametrize("N", [20, 50])
def test_contour_matches_mc_large_n(N):
    a = np.linspace(1.0, -1.0, N) * 2
    est = bessel_mc(a, [0.8], 1.5, rng=make_rng(N), draws=20_000)
    assert abs(est.mean - bessel_contour_m1(a, 0.8, 1.5).real) <= 3 * est.stderr


@settings(max_examples=25, deadline=None)
@given(a=labels(min_size=2, max_size=5), y=st.floats(-2, 2).filter(lambda v: abs(v) > 0.05),
       theta=st.floats(0.6, 3.0))
def test_contour_shift_property(a, y, theta):
    b, r = recentre_labels(a)
    lhs = bessel_contour_m1(a, y, theta)
    rhs = math.exp(r * y) * bessel_contour_m1(b, y, theta)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


# --- theta = 0 --------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 0.4, -1.7, 3.2])
def test_theta0_cosh(t):
    assert bessel_theta0([1.0, -1.0], [t, 0.0]).real == pytest.approx(math.cosh(t), rel=1e-14)


def test_theta0_zero_and_permutations():
    rng = np.random.default_rng(0)
    a = rng.normal(size=5) + 1j * rng.normal(size=5)
    y = rng.normal(size=5)
    assert bessel_theta0(a, np.zeros(5)) == pytest.approx(1.0)
    v = bessel_theta0(a, y)
    p, q = rng.permutation(5), rng.permutation(5)
    assert bessel_theta0(a[p], y[q]) == pytest.approx(v, rel=1e-12)
    with pytest.raises(PreconditionError):
        bessel_theta0(np.arange(9.0), [1.0])


# --- recentring ------------------------------------------------------------------


def test_recentre_pair():
    b, r = recentre_labels([1.0, 0.0])
    assert r == 0.5 and list(b.values) == [0.5, -0.5]


def test_recentre_fixed_point():
    b, r = recentre_labels([0.5, -0.5])
    assert r == 0.0 and list(b.values) == [0.5, -0.5]


@settings(max_examples=50, deadline=None)
@given(a=labels(max_size=8))
def test_recentre_sums_to_zero(a):
    b, r = recentre_labels(a)
    assert isinstance(b, OrderedTuple)
    assert abs(b.values.sum()) <= 1e-12 * max(1.0, np.abs(a.values).max()) * a.values.size
    assert r == pytest.approx(a.values.mean(), rel=1e-14, abs=1e-15)


def test_recentre_compensates_by_oracle():
    a, y, theta = [1.7, 0.2], [0.9, -0.4], 0.8
    b, r = recentre_labels(a)
    lhs = bessel_quadrature_small(b, y, theta)
    rhs = bessel_quadrature_small(a, y, theta) * math.exp(-r * sum(y))
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


# --- Pieri-type identity ------------------------------------------------------------


def test_pieri_n2_deterministic():
    lhs, rhs = pieri_check_m1([1.0, 0.0], 1.0, 0.5, 1.0)
    assert rhs == pytest.approx(lhs, rel=1e-6)


@pytest.mark.parametrize("theta", [0.5, 2.0])
def test_pieri_n2_other_theta(theta):
    res = pieri_check_m1([1.0, -0.3], 1.4, 0.6, theta)
    assert res.rhs == pytest.approx(res.lhs, rel=1e-6) and res.rhs_stderr == 0.0


def test_pieri_n3_mc():
    res = pieri_check_m1([1.0, 0.2, -0.5], 1.0, 0.5, 0.5, inner="mc", rng=make_rng(9), draws=20_000)
    assert abs(res.rhs - res.lhs) <= 3 * res.rhs_stderr


def test_pieri_mc_agrees_with_oracle_at_n2():
    a = [1.0, 0.0]
    exact = pieri_check_m1(a, 1.2, 0.7, 1.5, inner="oracle")
    mc = pieri_check_m1(a, 1.2, 0.7, 1.5, inner="mc", rng=make_rng(10), draws=20_000)
    assert abs(mc.rhs - exact.rhs) <= 3 * mc.rhs_stderr


def test_pieri_constraints():
    with pytest.raises(DomainError):
        pieri_check_m1([1.0, 0.0], 0.5, 0.5, 1.0)
    with pytest.raises(DomainError):
        pieri_check_m1([1.0, 0.0], 1.0, -0.1, 1.0)

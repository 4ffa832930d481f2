import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from dhgrad.constants import K_sd, c_alpha, gamma, log_coeffs, riesz_A, sphere_area

mp.mp.dps = 40


def _c_alpha_ref(d, alpha):
    return float(mp.pi ** (mp.mpf(d) / 2 - alpha) * mp.gamma(mp.mpf(alpha) / 2) / mp.gamma((d - mp.mpf(alpha)) / 2))


def _K_ref(s, d):
    s, d = mp.mpf(s), mp.mpf(d)
    area = 2 * mp.pi ** (d / 2) / mp.gamma(d / 2)
    num = mp.gamma((d + 1 + s) / 2) * mp.gamma((d + 1 - s) / 2)
    den = mp.gamma(d / 2) * mp.gamma((3 - s) / 2) * mp.gamma((s + 1) / 2)
    return float(num / (den * area * mp.pi ** (d / 2)))


def _away_from_poles(x):
    return x > 0 or abs(x - round(x)) > 1e-3


@settings(max_examples=300, deadline=None)
@given(st.floats(-30.0, 60.0).filter(_away_from_poles))
def test_gamma_matches_mpmath(x):
    ref = float(mp.gamma(x))
    assert gamma(x) == pytest.approx(ref, rel=5e-14)


@pytest.mark.parametrize("n", range(1, 25))
def test_gamma_integers_are_factorials(n):
    assert gamma(n) == float(math.factorial(n - 1))


def test_gamma_half_integers():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma(-0.5) == pytest.approx(-2 * math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles_raise(x):
    with pytest.raises(ValueError, match="pole"):
        gamma(x)


def test_gamma_nan_raises():
    with pytest.raises(ValueError):
        gamma(float("nan"))


@pytest.mark.parametrize("d, area", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi**2)])
def test_sphere_area(d, area):
    assert sphere_area(d) == pytest.approx(area, rel=1e-15)


@pytest.mark.parametrize("d", [0, -1, 2.5])
def test_sphere_area_rejects_bad_dimension(d):
    with pytest.raises(ValueError):
        sphere_area(d)


def test_c_alpha_inverse_square_in_three_dimensions():
    # 1/|x|^2 <-> pi/|xi| in R^3
    assert c_alpha(3, 1.0) == pytest.approx(math.pi, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.floats(-5.9, 0.99))
def test_c_alpha_matches_mpmath(d, frac):
    alpha = frac * d
    if alpha <= 0 and abs(alpha / 2 - round(alpha / 2)) < 1e-6:
        return
    assert c_alpha(d, alpha) == pytest.approx(_c_alpha_ref(d, alpha), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.floats(0.01, 0.99))
def test_c_alpha_reflection_pairs_to_one(d, frac):
    # the transform applied twice is the identity on radial functions
    alpha = frac * d
    assert c_alpha(d, alpha) * c_alpha(d, d - alpha) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("alpha", [3.0, 4.0, 0.0, -2.0, -4.0])
def test_c_alpha_rejects(alpha):
    with pytest.raises(ValueError):
        c_alpha(3, alpha)


@pytest.mark.parametrize("d, ell", [(3, 1), (3, 2), (2, 1), (4, 1)])
def test_log_coeffs_against_mpmath_derivative(d, ell):
    k = 2 * ell

    def residue(a):
        return (a + k) * mp.pi ** (mp.mpf(d) / 2 - a) * mp.gamma(a / 2) / mp.gamma((d - a) / 2)

    lam_ref = float(mp.diff(residue, -k))
    A_ref = float((-1) ** ell * 2 * mp.pi ** (k + mp.mpf(d) / 2) / (mp.gamma(mp.mpf(d + k) / 2) * mp.factorial(ell)))
    A, lam = log_coeffs(d, ell)
    assert A == pytest.approx(A_ref, rel=1e-13)
    assert lam == pytest.approx(lam_ref, rel=1e-8)


def test_log_coeffs_residue_matches_A():
    # A_k is the residue of c_alpha at alpha = -k
    d, ell = 3, 1
    A, _ = log_coeffs(d, ell)
    eps = 1e-7
    res = eps * c_alpha(d, -2.0 + eps)
    assert res == pytest.approx(A, rel=1e-5)


@pytest.mark.parametrize("ell", [0, 1.5, -1])
def test_log_coeffs_rejects(ell):
    with pytest.raises(ValueError):
        log_coeffs(3, ell)


def test_K_at_s_one():
    assert K_sd(1.0, 3) == pytest.approx(3 / (16 * math.pi**2), rel=1e-14)
    assert riesz_A(1.0, 3) == 0.0


@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.9, 0.99])
@pytest.mark.parametrize("d", [2, 3, 5])
def test_K_matches_mpmath(s, d):
    assert K_sd(s, d) == pytest.approx(_K_ref(s, d), rel=1e-13)


def test_riesz_A_frozen_value():
    # frozen from the mpmath evaluation of K(1/2, 3)/2
    assert riesz_A(0.5, 3) == pytest.approx(0.5 * _K_ref(0.5, 3), rel=1e-14)
    assert riesz_A(0.5, 3) == pytest.approx(0.00755895338278113, rel=1e-14)


@pytest.mark.parametrize("s, d", [(0.0, 3), (1.2, 3), (0.5, 1)])
def test_K_rejects(s, d):
    with pytest.raises(ValueError):
        K_sd(s, d)

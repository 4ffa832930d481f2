import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from dhgrad.kernels import (
    FAMILIES,
    KernelRejected,
    KernelSpec,
    PowerPiece,
    RadialProfile,
    ball_indicator,
    bump_profile,
    check_gradient_condition,
    check_integrability,
    check_monotone_convex,
    gaussian_profile,
    make_kernel,
    truncated_power,
)


@pytest.mark.parametrize("kw, match", [
    (dict(family="nope"), "unknown family"),
    (dict(family="riesz", s=1.0), "s must lie"),
    (dict(family="riesz", s=0.0), "s must lie"),
    (dict(family="riesz", d=1), "d must be"),
    (dict(family="riesz", a=-1.0), "a must be positive"),
    (dict(family="local", b=0.0, r=2.0, R=1.0), "0 < r < R"),
    (dict(family="local", b=1.0), "b = 0"),
    (dict(family="two_scale", tail=1.2), "tail t"),
    (dict(family="two_scale", tail=0.3, b=0.0), "b must be positive"),
    (dict(family="intermediate", tail=2.5), "tail exponent"),
    (dict(family="local", b=0.0, blend_sharpness=1.0), "blend_sharpness"),
])
def test_spec_validation(kw, match):
    with pytest.raises(ValueError, match=match):
        KernelSpec(**kw)


def test_defaults():
    assert KernelSpec.default("riesz").s == 0.5
    loc = KernelSpec.default("local")
    assert (loc.s, loc.b, loc.r, loc.R) == (0.5, 0.0, 1.0, 4.0)
    inter = KernelSpec.default("intermediate")
    assert (inter.s, inter.tail) == (0.6, 4.0)
    two = KernelSpec.default("two_scale")
    assert (two.s, two.tail) == (0.6, 0.3)
    assert KernelSpec.default("two_scale", s=0.4).s == 0.4


def test_exponent_bookkeeping():
    two = KernelSpec.default("two_scale")
    assert two.alpha == pytest.approx(0.4)
    assert two.tail_p_exponent == 0.3 and two.beta == pytest.approx(0.7)
    assert KernelSpec.default("intermediate").tail_p_exponent == pytest.approx(2.0)
    assert KernelSpec.default("local").beta is None
    sc = two.scaled(3.0)
    assert (sc.a, sc.b) == (3.0, 3.0)


def test_local_short_transition_is_rejected_with_reason():
    with pytest.raises(KernelRejected, match=r"R >= 3"):
        make_kernel(KernelSpec.default("local", R=2.5))


@pytest.mark.parametrize("family", FAMILIES)
def test_exact_power_laws_outside_transition(family):
    spec = KernelSpec.default(family)
    prof = make_kernel(spec)
    d = spec.d
    rho_in = np.geomspace(1e-4, spec.r if family != "riesz" else 10.0, 50)
    assert np.array_equal(prof.g(rho_in), spec.a * rho_in ** (-(d - 1) - spec.s))
    if family == "riesz":
        return
    rho_out = np.geomspace(spec.R * (1 + 1e-12), 1e4, 50)
    tau = spec.tail_p_exponent
    expected = np.zeros_like(rho_out) if tau is None else spec.b * rho_out ** (-(d - 1) - tau)
    assert np.array_equal(prof.g(rho_out), expected)


@pytest.mark.parametrize("family", ["local", "intermediate", "two_scale"])
def test_transition_is_continuously_differentiable(family):
    spec = KernelSpec.default(family)
    prof = make_kernel(spec)
    assert prof.meta["defect"] < 1e-10
    for x in (spec.r, spec.R):
        eps = 1e-9 * x
        assert prof.g(x - eps) == pytest.approx(prof.g(x + eps), rel=1e-7, abs=1e-14)
        assert prof.dg(x - eps) == pytest.approx(prof.dg(x + eps), rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_dg_is_derivative_of_g(family):
    prof = make_kernel(KernelSpec.default(family))
    x = np.linspace(0.3, 6.0, 37)
    h = 1e-6 * x
    fd = (prof.g(x + h) - prof.g(x - h)) / (2 * h)
    assert np.allclose(prof.dg(x), fd, rtol=1e-6, atol=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_defaults_are_certified(family):
    prof = make_kernel(KernelSpec.default(family))
    assert check_monotone_convex(prof)
    assert check_gradient_condition(prof)["passed"]
    assert check_integrability(prof)["passed"]


def test_gradient_condition_riesz_closed_form():
    # |g'| = (2+s) rho^(-3-s): inner 4 pi (2+s)/(1-s), outer 4 pi (2+s)/s
    s = 0.5
    res = check_gradient_condition(make_kernel(KernelSpec("riesz", s=s)))
    assert res["inner_integral"] == pytest.approx(4 * np.pi * (2 + s) / (1 - s), rel=1e-10)
    assert res["outer_integral"] == pytest.approx(4 * np.pi * (2 + s) / s, rel=1e-10)


def _pure_power(e):
    piece = PowerPiece(1.0, e)
    return RadialProfile(d=3, r_lo=1.0, r_hi=1.0, head=piece, tail=piece, middle_g=piece.g, middle_dg=piece.dg)


def test_gradient_condition_detects_divergence():
    too_singular = truncated_power(-3.5, 1.0)
    res = check_gradient_condition(too_singular)
    assert not res["passed"] and "core" in res["diagnostics"]["reason"]
    too_slow = _pure_power(-1.5)
    res = check_gradient_condition(too_slow)
    assert not res["passed"] and "tail" in res["diagnostics"]["reason"]


def test_ball_indicator_is_not_convex_decreasing():
    assert not check_monotone_convex(ball_indicator(1.0))


def test_test_profiles():
    b = bump_profile(2.0)
    assert b.g(0.0) == 1.0
    assert b.g(2.0) == 0.0 and b.g(3.0) == 0.0
    x = np.linspace(0.1, 1.9, 11)
    fd = (b.g(x + 1e-6) - b.g(x - 1e-6)) / 2e-6
    assert np.allclose(b.dg(x), fd, rtol=1e-6, atol=1e-10)
    gp = gaussian_profile()
    assert gp.g(1.0) == pytest.approx(np.exp(-np.pi))
    assert gp.compact_support and gp.head_exponent is None


def test_table_and_export(tmp_path):
    prof = make_kernel(KernelSpec.default("two_scale")).with_table(1e-2, 1e2, 64)
    rho, g, dg = prof.table
    assert rho.size == 64 and rho[0] == pytest.approx(1e-2)
    prof.export(tmp_path / "g.dat")
    data = np.loadtxt(tmp_path / "g.dat")
    assert np.allclose(data[:, 0], rho) and np.allclose(data[:, 1], g, rtol=1e-15)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(s=st.floats(0.1, 0.9), t=st.floats(0.05, 0.95), R=st.floats(1.3, 6.0), b=st.floats(0.2, 5.0))
def test_random_two_scale_kernels_are_rejected_or_certified(s, t, R, b):
    spec = KernelSpec("two_scale", s=s, tail=t, b=b, R=R)
    try:
        prof = make_kernel(spec)
    except KernelRejected as exc:
        assert "no convex non-increasing transition" in str(exc)
        return
    assert check_monotone_convex(prof)
    rho = np.array([0.5, 1.0, R, 2 * R])
    p = prof.p(rho)
    assert p[0] == pytest.approx(0.5 ** -s) and p[1] == pytest.approx(1.0)
    assert p[3] == pytest.approx(b * (2 * R) ** -t, rel=1e-12)


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(s=st.floats(0.1, 0.9), R=st.floats(1.2, 15.0))
def test_local_kernel_feasibility_needs_long_transition(s, R):
    # a compact tail needs the chord from (r, r^-s) to (R, 0) to be no steeper than p'(r)
    assume(abs(R - (1 + 1 / s)) > 1e-3)
    spec = KernelSpec("local", s=s, b=0.0, R=R)
    if R < 1 + 1 / s:
        with pytest.raises(KernelRejected):
            make_kernel(spec)
    else:
        try:
            prof = make_kernel(spec)
        except KernelRejected as exc:
            assert "fade-out" in str(exc)
            return
        assert check_monotone_convex(prof)


@pytest.mark.parametrize("amp", [1e-3, 1e-6])
def test_convexity_check_detects_small_wiggles(amp):
    from dataclasses import replace

    prof = make_kernel(KernelSpec.default("two_scale"))
    base_g = prof.middle_g

    def wiggly(x):
        x = np.asarray(x, dtype=float)
        return base_g(x) * (1.0 + amp * np.sin(12 * np.pi * (x - prof.r_lo) / (prof.r_hi - prof.r_lo)))

    bad = replace(prof, middle_g=wiggly, meta={k: v for k, v in prof.meta.items() if k != "_table"})
    assert not check_monotone_convex(bad)

"""Wave profiles and the transform pair (h, h_tilde).

Independent references used below:
  - g1(u) = u, alpha = 1/4: the wave ODE is linear and the launch slope
    -sqrt(alpha) selects the pure slow mode, so U(s) = e^{-s/2} exactly and
    h is the identity on [0, 1];
  - alpha = 2/3 (c = 5/sqrt6) with g0(u) = u(1-u): the classical explicit
    logistic wave U0(s) = (1 + C e^{s/sqrt6})^{-2}; unit tail limit forces
    C = 1, whence h_tilde(v) = v/(1+sqrt v)^2 in closed form, the left-tail
    amplitude is exactly 2, and r_plus = 1/sqrt6;
  - decay rates are the roots {sqrt(alpha), 1/sqrt(alpha)} of r^2 - cr + 1 = 0;
  - residual checks use fourth-order central differences of the transforms,
    independent of the interpolant's own derivative evaluation.
"""

import math

import numpy as np
import pytest

from frontlab.errors import NormalizationError, ResolutionError, ThresholdError
from frontlab.profiles import (
    SuperTransform,
    _fit_tail_amplitude,
    build_transforms,
    solve_sub_profile,
    solve_super_profile,
    wave_speed,
)
from frontlab.reaction import EnvelopeFunction, lower_envelope, upper_envelope

ALPHA_CAP_NU2 = (math.sqrt(2.0) - 1.0) ** 2


@pytest.fixture(scope="module")
def kpp_super():
    return solve_super_profile(upper_envelope("linear"), 0.25)


@pytest.fixture(scope="module")
def logistic_sub():
    return solve_sub_profile(lower_envelope("logistic"), 0.25)


@pytest.fixture(scope="module")
def kpp_transforms(kpp_super, logistic_sub):
    return build_transforms(kpp_super, logistic_sub)


@pytest.fixture(scope="module")
def nu2_transforms():
    sup = solve_super_profile(upper_envelope("superlinear", beta=1.0), ALPHA_CAP_NU2)
    sub = solve_sub_profile(lower_envelope("logistic"), ALPHA_CAP_NU2)
    return build_transforms(sup, sub)


def _fd_wave_residual(transform, g, vv, alpha, rel=1e-4):
    """alpha v^2 h'' - v h' + g(h) with h', h'' from central differences."""
    dv = rel * vv
    vals = {k: transform(vv + k * dv) for k in (-2, -1, 0, 1, 2)}
    d1 = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * dv)
    d2 = (-vals[-2] + 16 * vals[-1] - 30 * vals[0] + 16 * vals[1] - vals[2]) / (12 * dv**2)
    return np.max(np.abs(alpha * vv**2 * d2 - vv * d1 + np.asarray(g(vals[0]))))


# ---------------------------------------------------------------------------
# wave speed


def test_wave_speed_closed_forms():
    assert wave_speed(0.25, 1.0) == pytest.approx(2.5, abs=1e-15)
    assert wave_speed(0.99, 1.0) >= 2.0
    # at the admissibility cap for nu = 2 the speed is exactly 2 sqrt 2
    assert wave_speed(ALPHA_CAP_NU2, 2.0) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def test_wave_speed_rejects_inadmissible():
    with pytest.raises(ThresholdError):
        wave_speed(ALPHA_CAP_NU2 + 1e-6, 2.0)
    with pytest.raises(ThresholdError):
        wave_speed(0.0, 1.0)
    with pytest.raises(ThresholdError):
        wave_speed(1.0, 1.0)
    with pytest.raises(ThresholdError):
        wave_speed(-0.3, 1.0)


# ---------------------------------------------------------------------------
# super profile


def test_super_profile_kpp_is_pure_exponential(kpp_super):
    assert np.max(np.abs(kpp_super.U - np.exp(-0.5 * kpp_super.s))) <= 1e-9
    assert kpp_super.A_tail == pytest.approx(1.0, abs=1e-9)
    assert abs(kpp_super.s0) <= 1e-8


def test_super_profile_ode_residual(kpp_super, nu2_transforms):
    for sol in (kpp_super, nu2_transforms.super_solution):
        mids = 0.5 * (sol.s[:-1] + sol.s[1:])[::7]
        assert np.max(sol.residual_at(mids)) <= 1e-8


def test_super_profile_triangle_and_convexity(nu2_transforms):
    sol = nu2_transforms.super_solution
    assert sol.certificates["triangle"]["passed"], sol.certificates
    assert sol.certificates["slope"]["passed"], sol.certificates
    # direct scans of the same facts
    assert np.max(sol.V) <= 1e-10
    assert np.max(sol.U) <= 1.0 + 1e-10
    assert np.min(sol.V + 0.5 * sol.c * sol.U) >= -1e-10
    assert np.min(-sol.V - math.sqrt(sol.alpha) * np.asarray(sol.envelope(sol.U))) >= -1e-10


def test_super_profile_initial_slope_above_hypotenuse(kpp_super, nu2_transforms):
    # the launch slope never undershoots -c/2
    for sol in (kpp_super, nu2_transforms.super_solution):
        assert sol.V[0] >= -0.5 * sol.c - 1e-12


def test_super_profile_edge_flux(nu2_transforms):
    # c^2 U/4 - g1(U) >= nu U - g1(U) >= 0 on the hypotenuse, nu = 2 here
    sol = nu2_transforms.super_solution
    uu = np.linspace(0.0, 1.0, 401)
    g1 = np.asarray(sol.envelope(uu))
    assert np.min(0.25 * sol.c**2 * uu - g1) >= -1e-12
    assert np.min(2.0 * uu - g1) >= -1e-12


def test_super_profile_rejects_wrong_side():
    with pytest.raises(ValueError):
        solve_super_profile(lower_envelope("logistic"), 0.25)


# ---------------------------------------------------------------------------
# sub profile


def test_sub_profile_monotone_slow_tail(logistic_sub):
    assert np.all(np.diff(logistic_sub.U) < 0)
    # decay rates for c = 2.5 are {0.5, 2}; the generic trajectory rides 0.5
    tail = logistic_sub.U < 1e-5
    slope = np.diff(np.log(logistic_sub.U[tail])) / np.diff(logistic_sub.s[tail])
    assert np.max(np.abs(slope + 0.5)) <= 1e-3
    assert logistic_sub.r_plus == pytest.approx(
        0.5 * (-2.5 + math.sqrt(2.5**2 + 4.0)), abs=1e-12)


def test_sub_profile_concavity_certificate(logistic_sub):
    assert logistic_sub.certificates["slope"]["passed"]
    ra = math.sqrt(logistic_sub.alpha)
    g0U = np.asarray(logistic_sub.envelope(logistic_sub.U))
    assert np.max(-logistic_sub.V - ra * g0U) <= 1e-10


@pytest.mark.parametrize("alpha", [0.05, 0.25, 2.0 / 3.0])
def test_sub_launch_rate_below_slope_bound(alpha):
    # r_plus <= sqrt(alpha)|g0'(1)| puts the seed inside the invariant region
    c = math.sqrt(alpha) + 1.0 / math.sqrt(alpha)
    r_plus = 0.5 * (-c + math.sqrt(c * c + 4.0))
    assert r_plus <= math.sqrt(alpha) * 1.0 + 1e-12


def test_sub_profile_explicit_logistic_wave():
    # alpha = 2/3 is the speed 5/sqrt6 with the exact (1 + e^{s/sqrt6})^{-2} wave
    sub = solve_sub_profile(lower_envelope("logistic"), 2.0 / 3.0)
    assert sub.r_plus == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-12)
    assert sub.B_left == pytest.approx(2.0, abs=1e-6)


def test_sub_profile_degenerate_top_zero():
    flat = EnvelopeFunction("flat-top", "lower",
                            lambda u: u * (1.0 - u) ** 2,
                            lambda u: (1.0 - u) ** 2 - 2.0 * u * (1.0 - u))
    with pytest.raises(NormalizationError):
        solve_sub_profile(flat, 0.25)


# ---------------------------------------------------------------------------
# tail regression guards


def test_tail_fit_rejects_fast_decay():
    alpha = 0.25
    s = np.linspace(0.0, 50.0, 10001)
    U = np.exp(-2.0 * s)  # the fast rate 1/sqrt(alpha)
    with pytest.raises(NormalizationError):
        _fit_tail_amplitude(s, U, alpha)


def test_tail_fit_needs_resolved_window():
    s = np.linspace(0.0, 10.0, 51)
    U = np.exp(-0.5 * s)  # reaches only ~7e-3: no samples in the window
    with pytest.raises(ResolutionError):
        _fit_tail_amplitude(s, U, 0.25)


def test_tail_fit_recovers_amplitude():
    s = np.linspace(0.0, 60.0, 24001)
    A = 3.7
    U = A * np.exp(-0.5 * s) + 0.2 * np.exp(-2.0 * s)
    got, resid = _fit_tail_amplitude(s, U, 0.25)
    assert got == pytest.approx(A, rel=1e-10)


# ---------------------------------------------------------------------------
# transforms


def test_transforms_kpp_identity(kpp_transforms):
    v = np.geomspace(1e-8, kpp_transforms.v_max, 200)
    assert np.max(np.abs(kpp_transforms.upper(v) - v)) <= 1e-10
    assert kpp_transforms.v_max == pytest.approx(1.0, abs=1e-9)


def test_transforms_reach_one_at_vmax(kpp_transforms, nu2_transforms):
    for tr in (kpp_transforms, nu2_transforms):
        assert float(tr.upper(np.array([tr.v_max]))[0]) == pytest.approx(1.0, abs=1e-9)


def test_transforms_unit_slope_at_zero(kpp_transforms, nu2_transforms):
    for tr in (kpp_transforms, nu2_transforms):
        for t in (tr.upper, tr.lower):
            assert float(t(np.array([1e-8]))[0]) / 1e-8 == pytest.approx(1.0, abs=1e-6)


def test_transforms_sandwich(nu2_transforms):
    v = np.geomspace(1e-9, nu2_transforms.v_max, 400)
    h = nu2_transforms.upper(v)
    ht = nu2_transforms.lower(v)
    assert np.min(h - v) >= -1e-10
    assert np.max(ht - v) <= 1e-10
    assert np.all(ht <= np.minimum(h, 1.0) + 1e-12)


def test_transforms_convexity_scan(nu2_transforms):
    v = np.geomspace(1e-6, nu2_transforms.v_max * 0.999, 500)
    assert np.min(nu2_transforms.upper.second(v)) >= -1e-10
    assert np.max(nu2_transforms.lower.second(v)) <= 1e-10


def test_transforms_residual_identity_fd(nu2_transforms):
    v = np.geomspace(1e-6, nu2_transforms.v_max * 0.995, 300)
    g1 = upper_envelope("superlinear", beta=1.0)
    g0 = lower_envelope("logistic")
    assert _fd_wave_residual(nu2_transforms.upper, g1, v, ALPHA_CAP_NU2) <= 1e-6
    assert _fd_wave_residual(nu2_transforms.lower, g0, v, ALPHA_CAP_NU2) <= 1e-6


def test_transforms_sub_closed_form():
    sup = solve_super_profile(upper_envelope("linear"), 2.0 / 3.0)
    sub = solve_sub_profile(lower_envelope("logistic"), 2.0 / 3.0)
    tr = build_transforms(sup, sub)
    v = np.geomspace(1e-6, 1e6, 400)
    exact = v / (1.0 + np.sqrt(v)) ** 2
    assert np.max(np.abs(tr.lower(v) - exact)) <= 1e-9


def test_transforms_saturation_far_right(kpp_transforms):
    # 1 - h_tilde(v) = B v^{-r_plus/sqrt(alpha)}: slow but certain saturation
    sub = kpp_transforms.sub_solution
    v = np.exp(30.0)
    expect = sub.B_left * v ** (-sub.r_plus / math.sqrt(0.25))
    got = 1.0 - float(kpp_transforms.lower(np.array([v]))[0])
    assert got == pytest.approx(expect, rel=1e-6)
    # at log v = 40 the gap ~1.4e-12 is still representable below 1
    assert float(kpp_transforms.lower.of_log(np.array([40.0]))[0]) < 1.0
    assert float(kpp_transforms.lower.of_log(np.array([400.0]))[0]) <= 1.0


def test_transforms_limit_one_with_small_alpha():
    # r_plus/sqrt(alpha) -> 1 as alpha -> 0: at alpha = 0.02 the approach to 1
    # is fast enough to fall below 1e-4 by v = e^10
    sup = solve_super_profile(upper_envelope("linear"), 0.02)
    sub = solve_sub_profile(lower_envelope("logistic"), 0.02)
    tr = build_transforms(sup, sub)
    assert 1.0 - float(tr.lower(np.array([math.exp(10.0)]))[0]) <= 1e-4


def test_transforms_derivatives_match_differences(nu2_transforms):
    v1 = np.geomspace(1e-4, nu2_transforms.v_max * 0.9, 100)
    dv1 = 1e-5 * v1
    # the second difference cancels ~eps*h of noise against h''*dv^2 of
    # signal, so it needs the larger step and a floor on v to be meaningful
    v2 = np.geomspace(1e-2, nu2_transforms.v_max * 0.9, 60)
    dv2 = 1e-3 * v2
    for t in (nu2_transforms.upper, nu2_transforms.lower):
        fd1 = (t(v1 + dv1) - t(v1 - dv1)) / (2 * dv1)
        fd2 = (t(v2 + dv2) - 2 * t(v2) + t(v2 - dv2)) / dv2**2
        assert np.max(np.abs(t.prime(v1) / fd1 - 1.0)) <= 1e-5
        assert np.max(np.abs(t.second(v2) / fd2 - 1.0)) <= 1e-4


def test_transforms_inverse_roundtrip(nu2_transforms):
    for t in (nu2_transforms.upper, nu2_transforms.lower):
        for y in (1e-4, 0.03, 0.4, 0.9):
            v = t.inverse(y)
            assert float(t(np.array([v]))[0]) == pytest.approx(y, rel=1e-10)
    # the sub transform inverts past its sampled range analytically
    v = nu2_transforms.lower.inverse(1.0 - 1e-8)
    assert 1.0 - float(nu2_transforms.lower(np.array([v]))[0]) == pytest.approx(1e-8, rel=1e-4)


def test_transform_autonomy(kpp_super):
    # relaunching midway along the orbit and re-normalizing gives the same h
    i = int(np.argmin(np.abs(kpp_super.U - 0.7)))
    shifted = solve_super_profile(upper_envelope("linear"), 0.25,
                                  seed=(float(kpp_super.U[i]), float(kpp_super.V[i])))
    t1 = SuperTransform(sol=kpp_super, alpha=0.25)
    t2 = SuperTransform(sol=shifted, alpha=0.25)
    v = np.geomspace(1e-6, 0.95 * float(kpp_super.U[i]), 200)
    assert np.max(np.abs(t1(v) - t2(v))) <= 1e-8


def test_build_transforms_input_checks(kpp_super, logistic_sub):
    with pytest.raises(ValueError):
        build_transforms(kpp_super, kpp_super)
    other_sub = solve_sub_profile(lower_envelope("logistic"), 0.3)
    with pytest.raises(ValueError):
        build_transforms(kpp_super, other_sub)

"""Spectral top and generalized eigenfunctions.

Frozen reference values and their independent origins:
  - square-well lambda0 = 1.1539607963518064 from the even bound-state
    dispersion k tan k = sqrt(1/2 - k^2) solved by bracketed root-finding
    (k = 0.5882509699509162, lambda0 = 3/2 - k^2);
  - gaussian-bump lambda0 = 1.1195660883 from a dense symmetric tridiagonal
    eigensolve at mesh 2e-3 and 1e-3 on [-40, 40], Richardson-extrapolated
    (stable to ~1e-9);
  - perturbed eigenfunction samples at lambda = 1.8 from the dx = 5e-3 run,
    cross-checked against dx = 1e-2 (identical to machine precision since the
    integrator tolerance, not the output mesh, controls accuracy).
"""

import math

import numpy as np
import pytest

from frontlab.errors import NoDecayingSolutionError, WindowError
from frontlab.linearized import LinearizedSolution, gradient_certificate
from frontlab.reaction import build_reaction
from frontlab.spectral import doubling_length, eigenfunction, sup_spectrum, superpose

WELL_LAMBDA0 = 1.1539607963518064
BUMP_LAMBDA0 = 1.1195660883


@pytest.fixture(scope="module")
def kpp():
    return build_reaction("kpp")


@pytest.fixture(scope="module")
def bump():
    return build_reaction("kpp", a_kind="gaussian_bump",
                          a_params={"base": 1.0, "amp": 0.5, "width": 1.0})


@pytest.fixture(scope="module")
def kpp_lambda0(kpp):
    return sup_spectrum(kpp).lambda0


@pytest.fixture(scope="module")
def bump_pair(bump):
    return eigenfunction(bump, 1.8, lambda0=BUMP_LAMBDA0)


# ---------------------------------------------------------------------------
# sup_spectrum


def test_lambda0_constant_rate(kpp_lambda0):
    # essential spectrum top is a = 1; Dirichlet truncation approaches from below
    assert abs(kpp_lambda0 - 1.0) <= 1e-3
    assert kpp_lambda0 <= 1.0 + 1e-12


def test_lambda0_bump_matches_dense_oracle(bump):
    sb = sup_spectrum(bump)
    assert sb.lambda0 == pytest.approx(BUMP_LAMBDA0, abs=1e-6)


def test_lambda0_square_well_dispersion():
    well = build_reaction("kpp", a_kind="indicator",
                          a_params={"base": 1.0, "amp": 0.5, "half_width": 1.0})
    # the jump in a costs one order of convergence (nodes sample the jump at
    # full height), so the default mesh is good to ~1e-3 here, not ~1e-7
    sb = sup_spectrum(well)
    assert sb.lambda0 == pytest.approx(WELL_LAMBDA0, abs=1e-3)
    err_fine = abs(sup_spectrum(well, dx=5e-3).lambda0 - WELL_LAMBDA0)
    assert err_fine < abs(sb.lambda0 - WELL_LAMBDA0)


def test_lambda0_within_rate_bounds(bump):
    for spec in (build_reaction("kpp"), bump,
                 build_reaction("cubic", beta=1.0, a_kind="periodic",
                                a_params={"base": 1.0, "amp": 0.05, "freq": 1.0})):
        sb = sup_spectrum(spec)
        assert spec.a_minus - 1e-9 <= sb.lambda0 <= spec.a_plus + 1e-9


def test_lambda0_monotone_in_window(bump):
    # Dirichlet truncation: zero-extension embeds the smaller problem, so the
    # top eigenvalue cannot decrease when the window grows
    raw = []
    for X in (25.0, 50.0, 100.0):
        sb = sup_spectrum(bump, window=(-X, X), dx=2e-2)
        raw.append(sb.history[0][1])
    assert raw[0] <= raw[1] + 1e-12
    assert raw[1] <= raw[2] + 1e-12


def test_sup_spectrum_history_records_refinement(kpp):
    sb = sup_spectrum(kpp)
    assert len(sb.history) == 3
    assert sb.history[0][0] == pytest.approx(2 * sb.history[1][0])
    assert sb.history[2][0] == "richardson"


# ---------------------------------------------------------------------------
# eigenfunction: constant-rate closed form


def test_eigenfunction_constant_rate_closed_form(kpp, kpp_lambda0):
    pair = eigenfunction(kpp, 1.5, lambda0=kpp_lambda0)
    # phi(x) = exp(-x/sqrt2): relative match on the inner 80% of the window
    X = pair.window[1]
    mask = np.abs(pair.x) <= 0.8 * X
    exact_log = -pair.x[mask] / math.sqrt(2.0)
    assert np.max(np.abs(np.exp(pair.log_phi[mask] - exact_log) - 1.0)) <= 1e-6
    assert float(pair.phi_at(1.0)) == pytest.approx(0.49306869139523984, abs=1e-6)
    assert pair.phi[pair.x == 0.0][0] == 1.0


def test_eigenfunction_constant_rate_gradient_equality(kpp, kpp_lambda0):
    # alpha = 1 - (2 - 1.5) = 1/2 and phi'^2 = alpha a phi^2 exactly
    pair = eigenfunction(kpp, 1.5, lambda0=kpp_lambda0)
    assert pair.alpha == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(pair.psi**2 - 0.5)) <= 1e-12
    assert pair.grad_margin <= 1e-10


def test_eigenfunction_positive_decaying_growing(bump_pair):
    assert np.all(np.isfinite(bump_pair.log_phi))
    # log-slope negative at both ends: decay to the right, growth to the left
    assert bump_pair.psi[-1] < 0
    assert bump_pair.psi[0] < 0


def test_eigenfunction_residual_invariant(kpp, kpp_lambda0, bump_pair):
    pair = eigenfunction(kpp, 1.5, lambda0=kpp_lambda0)
    assert pair.residual <= 1e-6
    assert bump_pair.residual <= 1e-6


def test_eigenfunction_gradient_certificate_perturbed(bump_pair):
    # alpha = 1 - (2 - 1.8)/1.5 = 13/15
    assert bump_pair.alpha == pytest.approx(13.0 / 15.0, abs=1e-12)
    assert bump_pair.grad_margin <= 1e-10
    assert bump_pair.grad_margin_ratio < 0.0  # strict inequality off the constant case


def test_eigenfunction_refinement_stable(bump, bump_pair):
    fine = eigenfunction(bump, 1.8, lambda0=BUMP_LAMBDA0, dx=5e-3)
    X = bump_pair.window[1]
    mask = np.abs(bump_pair.x) <= 0.8 * X
    idx = np.searchsorted(fine.x, bump_pair.x[mask])
    rel = np.max(np.abs(np.exp(bump_pair.log_phi[mask] - fine.log_phi[idx]) - 1.0))
    assert rel <= 1e-6


def test_eigenfunction_frozen_samples(bump_pair):
    # fixed against the dx = 5e-3 solve (mesh-independent to ~1e-12)
    assert float(bump_pair.phi_at(1.0)) == pytest.approx(0.462491275501618, rel=1e-9)
    assert float(bump_pair.phi_at(-1.0)) == pytest.approx(1.91956896809872, rel=1e-9)
    assert float(bump_pair.phi_at(5.0)) == pytest.approx(0.0131127285301777, rel=1e-9)
    assert float(bump_pair.phi_at(-5.0)) == pytest.approx(57.9816184832104, rel=1e-9)


def test_eigenfunction_rejects_rate_at_or_below_top(kpp, kpp_lambda0, bump):
    with pytest.raises(NoDecayingSolutionError):
        eigenfunction(kpp, 0.95, lambda0=kpp_lambda0)   # below the estimate
    with pytest.raises(NoDecayingSolutionError):
        eigenfunction(kpp, 1.0, lambda0=kpp_lambda0)    # clears estimate, hits a(X)
    with pytest.raises(NoDecayingSolutionError):
        # clears a deliberately broken estimate; oscillation is caught in flight
        eigenfunction(bump, 1.05, lambda0=1.0)


def test_eigenfunction_above_double_min_rate_has_no_alpha(kpp, kpp_lambda0):
    # phi exists for any lambda above the top, but the gradient-bound constant
    # only makes sense below 2 a_minus
    pair = eigenfunction(kpp, 2.5, lambda0=kpp_lambda0)
    assert pair.alpha is None
    assert np.isnan(pair.grad_margin)
    assert pair.residual <= 1e-6


# ---------------------------------------------------------------------------
# doubling length


def test_doubling_length_closed_forms(kpp, kpp_lambda0):
    # pure exponential with rate r: L = ln 2 / r, rounded up to the grid
    for lam, exact in ((1.5, math.sqrt(2.0) * math.log(2.0)),
                       (1.25, 2.0 * math.log(2.0))):
        pair = eigenfunction(kpp, lam, lambda0=kpp_lambda0)
        assert pair.L >= exact - 1e-9
        assert pair.L <= exact + pair.dx


def test_doubling_length_brute_force(bump_pair):
    # exhaustive pair scan at the returned L, and minimality one cell below
    m = int(round(bump_pair.L / bump_pair.dx))
    lp = bump_pair.log_phi
    assert np.min(lp[:-m] - lp[m:]) >= math.log(2.0)
    assert np.min(lp[:-(m - 1)] - lp[m - 1:]) < math.log(2.0)


def test_doubling_length_valid_above_minimum(bump_pair):
    m = int(round(bump_pair.L / bump_pair.dx))
    lp = bump_pair.log_phi
    for mm in (m + 1, m + 7, 2 * m):
        assert np.min(lp[:-mm] - lp[mm:]) >= math.log(2.0)


def test_doubling_length_window_too_small(kpp, kpp_lambda0):
    # decay rate sqrt(0.01) = 0.1 needs L ~ 6.9; a +/-2 window cannot certify it
    pair = eigenfunction(kpp, 1.5, window=2.0, lambda0=kpp_lambda0)
    pair2 = eigenfunction(kpp, 1.01, window=2.0, lambda0=kpp_lambda0)
    assert pair.L is not None
    assert pair2.L is None
    with pytest.raises(WindowError):
        doubling_length(pair2)


# ---------------------------------------------------------------------------
# superpositions


def test_superpose_point_mass(kpp, kpp_lambda0):
    pair = eigenfunction(kpp, 1.5, lambda0=kpp_lambda0)
    v = superpose([(pair, 1.0)])
    xs = np.linspace(-10.0, 10.0, 101)
    expect = np.exp(1.5 * 0.3 + np.interp(xs, pair.x, pair.log_phi))
    got = v.v(0.3, xs)
    assert np.max(np.abs(got / expect - 1.0)) <= 1e-9
    assert v.alpha == pair.alpha
    assert v.L == pair.L


def test_superpose_normalization_at_origin(kpp, kpp_lambda0):
    pa = eigenfunction(kpp, 1.3, window=30.0, lambda0=kpp_lambda0)
    pb = eigenfunction(kpp, 1.4, window=30.0, lambda0=kpp_lambda0)
    v = superpose([(pa, 0.5), (pb, 0.5)])
    assert float(v.v(0.0, np.array([0.0]))[0]) == pytest.approx(1.0, abs=1e-12)
    assert v.lambda_top == 1.4
    assert v.alpha == pb.alpha


def test_superpose_gradient_bound_of_top_rate(kpp, kpp_lambda0):
    pa = eigenfunction(kpp, 1.3, window=30.0, lambda0=kpp_lambda0)
    pb = eigenfunction(kpp, 1.4, window=30.0, lambda0=kpp_lambda0)
    v = superpose([(pa, 0.5), (pb, 0.5)])
    report = gradient_certificate(v, [0.0, 0.7, 2.0], np.linspace(-25, 25, 501),
                                  lambda x: np.ones_like(x))
    assert report["passed"], report


def test_superpose_linearized_residual(kpp, kpp_lambda0):
    pa = eigenfunction(kpp, 1.3, window=30.0, lambda0=kpp_lambda0)
    pb = eigenfunction(kpp, 1.4, window=30.0, lambda0=kpp_lambda0)
    v = superpose([(pa, 0.5), (pb, 0.5)])
    res = v.pde_residual(lambda x: np.ones_like(x), 0.5, np.linspace(-20, 20, 801))
    assert res <= 1e-6


def test_superpose_rejects_degenerate_measures(kpp, kpp_lambda0):
    pair = eigenfunction(kpp, 1.5, lambda0=kpp_lambda0)
    with pytest.raises(ValueError):
        superpose([])
    with pytest.raises(ValueError):
        superpose([(pair, 0.0)])
    with pytest.raises(ValueError):
        superpose([(pair, -1.0), (pair, 2.0)])
    other = eigenfunction(kpp, 1.4, window=10.0, lambda0=kpp_lambda0)
    with pytest.raises(ValueError):
        superpose([(pair, 1.0), (other, 1.0)])

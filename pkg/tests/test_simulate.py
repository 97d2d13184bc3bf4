"""Simulation layer: stencils, stepping, run(), and front diagnostics."""

import math

import numpy as np
import pytest

from frontlab import kernels
from frontlab.errors import (DomainExhaustedError, FrontAbsentError,
                             InvalidSpecError)
from frontlab.linearized import EnvelopeFields
from frontlab.profiles import build_transforms, solve_sub_profile, solve_super_profile
from frontlab.reaction import build_reaction, coefficient_field
from frontlab.simulate import (FrontSolution, SimulationConfig, Stepper,
                               build_stencil, front_position, front_width, run,
                               speed_estimate)
from frontlab.spectral import doubling_length, eigenfunction, superpose


@pytest.fixture(scope="module")
def kpp():
    """Homogeneous KPP setup at lambda = 1.5 with its envelope fields."""
    spec = build_reaction("kpp", a_kind="constant", a_params={"value": 1.0})
    pair = eigenfunction(spec, 1.5, lambda0=1.0)
    lin = superpose([(pair, 1.0)])
    tr = build_transforms(solve_super_profile(spec.g1, pair.alpha),
                          solve_sub_profile(spec.g0, pair.alpha))
    env = EnvelopeFields(v=lin, lower_transform=tr.lower, upper_transform=tr.upper)
    lv_half = float(np.log(tr.lower.inverse(0.5)))

    def t_at(xq):
        # single mode: log v(t, x) = log v(0, x) + lambda t
        return (lv_half - float(lin.log_v(0.0, np.array([xq]))[0])) / 1.5

    return {"spec": spec, "pair": pair, "lin": lin, "tr": tr, "env": env,
            "L": doubling_length(pair), "t_at": t_at}


def _config(kpp, xl=-10.0, xr=30.0, dx=0.05, frac=(0.25, 0.75), **kw):
    t0 = kpp["t_at"](xl + frac[0] * (xr - xl))
    t1 = kpp["t_at"](xl + frac[1] * (xr - xl))
    return SimulationConfig(spec=kpp["spec"], envelopes=kpp["env"], x_left=xl,
                            x_right=xr, dx=dx, t0=t0, t1=t1, **kw)


# ---------------------------------------------------------------------------
# space operator


def test_stencil_plain_laplacian():
    spec = build_reaction("kpp")
    x = np.linspace(0.0, 1.0, 11)
    w = 1.0 / float(x[1] - x[0]) ** 2
    dlo, dup = build_stencil(spec, x)
    assert np.all(dlo == w) and np.all(dup == w)
    assert len(dlo) == 9


def test_stencil_harmonic_faces():
    # A = 1 + 3 on |x| <= 0.15: the grid sees values [1, 4, 4, 4, 1, 1]
    A = coefficient_field("indicator", {"base": 1.0, "amp": 3.0,
                                        "half_width": 0.15})
    spec = build_reaction("kpp", diffusion=A)
    x = np.array([-0.2, -0.1, 0.0, 0.1, 0.2, 0.3])
    dlo, dup = build_stencil(spec, x)
    dx2 = float(x[1] - x[0]) ** 2
    # faces straddling the jump average harmonically: 2*1*4/(1+4) = 1.6
    assert dlo[0] == pytest.approx(1.6 / dx2, rel=1e-12)
    assert dup[0] == pytest.approx(4.0 / dx2, rel=1e-12)
    assert dlo[3] == pytest.approx(1.6 / dx2, rel=1e-12)
    assert dup[3] == pytest.approx(1.0 / dx2, rel=1e-12)


def test_stencil_centered_drift_within_peclet():
    q = coefficient_field("constant", {"value": 0.5})
    spec = build_reaction("kpp", diffusion=coefficient_field("constant", {"value": 1.0}),
                          drift=q)
    x = np.linspace(0.0, 1.0, 11)
    dlo, dup = build_stencil(spec, x)
    assert np.allclose(dup, 100.0 + 0.5 / 0.2)
    assert np.allclose(dlo, 100.0 - 0.5 / 0.2)


def test_stencil_upwinds_at_high_peclet():
    # |q| dx / (2A) = 30 * 0.1 / 2 = 1.5 > 1: centered weights would go negative
    q = coefficient_field("constant", {"value": 30.0})
    spec = build_reaction("kpp", diffusion=coefficient_field("constant", {"value": 1.0}),
                          drift=q)
    x = np.linspace(0.0, 1.0, 11)
    dlo, dup = build_stencil(spec, x)
    assert np.allclose(dup, 100.0 + 300.0)
    assert np.allclose(dlo, 100.0)
    assert np.all(dlo >= 0.0) and np.all(dup >= 0.0)


def test_stencil_rejects_nonpositive_diffusion():
    A = coefficient_field("constant", {"value": -1.0})
    spec = build_reaction("kpp", diffusion=A)
    with pytest.raises(InvalidSpecError):
        build_stencil(spec, np.linspace(0.0, 1.0, 11))


# ---------------------------------------------------------------------------
# stepping


def _frozen_traces(u0):
    left, right = float(u0[0]), float(u0[-1])
    return lambda t: (left, right)


def test_step_reaction_off_constant_held():
    # with the reaction off the step is the implicit solve alone, which
    # reproduces a constant up to sweep roundoff
    spec = build_reaction("kpp")
    x = np.linspace(-2.0, 2.0, 81)
    u0 = np.full(81, 0.5)
    st = Stepper(spec, x, 1e-3, _frozen_traces(u0), reaction_scale=0.0)
    u = st.step(u0, 0.0)
    assert float(np.max(np.abs(u - 0.5))) <= 1e-15
    assert st.clamp_count == 0


def test_step_zero_state_fixed_bitwise():
    spec = build_reaction("cubic", beta=1.0)
    x = np.linspace(-2.0, 2.0, 81)
    u0 = np.zeros(81)
    st = Stepper(spec, x, 1e-3, _frozen_traces(u0))
    u = u0
    for k in range(20):
        u = st.step(u, k * st.dt)
    assert np.array_equal(u, u0)
    assert st.clamp_count == 0 and st.post_clip_count == 0


def test_step_saturated_state_pinned():
    # 1 is exact through the reaction; the solve wobbles by ulps and the
    # clip holds the state at saturation from above
    spec = build_reaction("cubic", beta=1.0)
    x = np.linspace(-2.0, 2.0, 81)
    u0 = np.ones(81)
    st = Stepper(spec, x, 1e-3, _frozen_traces(u0))
    u = u0
    for k in range(20):
        u = st.step(u, k * st.dt)
    assert np.all(u <= 1.0)
    assert float(np.min(u)) >= 1.0 - 1e-13
    assert st.clamp_count == 0


def test_step_boundary_sampled_at_new_time():
    spec = build_reaction("kpp")
    x = np.linspace(0.0, 1.0, 21)
    u0 = np.full(21, 0.25)
    st = Stepper(spec, x, 1e-3, lambda t: (0.25 + t, 0.25 - 0.1 * t))
    u = st.step(u0, 0.0)
    assert u[0] == 0.25 + 1e-3
    assert u[-1] == 0.25 - 1e-4


def test_step_rejects_dt_above_lipschitz_bound():
    spec = build_reaction("kpp")  # Lip = max|1 - 2u| = 1, margin 1.2
    x = np.linspace(0.0, 1.0, 21)
    with pytest.raises(InvalidSpecError, match="monotonicity bound"):
        Stepper(spec, x, 1.0, lambda t: (1.0, 0.0))


def test_step_rejects_mismatched_state():
    spec = build_reaction("kpp")
    st = Stepper(spec, np.linspace(0.0, 1.0, 21), 1e-3, lambda t: (1.0, 0.0))
    with pytest.raises(InvalidSpecError):
        st.step(np.zeros(20), 0.0)


def test_stepper_kernels_agree():
    if not kernels.HAVE_COMPILED:
        pytest.skip("compiled kernel not built")
    spec = build_reaction("cubic", beta=0.7, a_kind="periodic",
                          a_params={"base": 1.0, "amp": 0.2, "freq": 2.0})
    x = np.linspace(-5.0, 5.0, 201)
    u0 = 1.0 / (1.0 + np.exp(3.0 * x))
    traces = _frozen_traces(u0)
    out = {}
    for name in ("reference", "compiled"):
        st = Stepper(spec, x, 2e-3, traces, kernel=name)
        u = u0
        for k in range(100):
            u = st.step(u, k * st.dt)
        out[name] = u
    assert np.max(np.abs(out["reference"] - out["compiled"])) <= 1e-12


def test_comparison_principle_with_drift_and_diffusion():
    spec = build_reaction(
        "cubic", beta=1.0,
        diffusion=coefficient_field("periodic", {"base": 1.0, "amp": 0.4,
                                                 "freq": 3.0}),
        drift=coefficient_field("constant", {"value": 1.5}))
    x = np.linspace(-4.0, 4.0, 161)
    rng = np.random.default_rng(5)
    lo = np.clip(1.0 / (1.0 + np.exp(2.0 * x)) + 0.05 * rng.standard_normal(161),
                 0.0, 0.9)
    hi = np.minimum(lo + 0.08, 1.0)
    st_lo = Stepper(spec, x, 1e-3, _frozen_traces(lo))
    st_hi = Stepper(spec, x, 1e-3, _frozen_traces(hi))
    u, v = lo, hi
    for k in range(200):
        u = st_lo.step(u, k * 1e-3)
        v = st_hi.step(v, k * 1e-3)
        assert np.all(u <= v)


def test_self_convergence_is_second_order():
    spec = build_reaction("kpp")
    # dt = 8 dx^2 divides T exactly on every mesh, so all three integrations
    # reach the same final time and the Richardson ratio is clean
    T = 0.48
    results = {}
    for dx in (0.1, 0.05, 0.025):
        x = np.arange(-8.0, 8.0 + dx / 2, dx)
        u = 0.5 * (1.0 - np.tanh(x))
        st = Stepper(spec, x, 8.0 * dx**2, _frozen_traces(u))
        n = int(round(T / st.dt))
        assert abs(n * st.dt - T) < 1e-12
        for k in range(n):
            u = st.step(u, k * st.dt)
        results[dx] = (x, u)
    # compare on shared nodes of consecutive meshes
    def diff(c, f):
        xc, uc = results[c]
        xf, uf = results[f]
        return float(np.max(np.abs(uc - uf[::2][: len(uc)])))
    e1 = diff(0.1, 0.05)
    e2 = diff(0.05, 0.025)
    assert 2.5 <= e1 / e2 <= 6.0


# ---------------------------------------------------------------------------
# run()


def test_run_seeds_and_bounds(kpp):
    sol = run(_config(kpp))
    assert sol.u.shape == (41, 801)
    assert np.allclose(sol.t, np.linspace(sol.t[0], sol.t[-1], 41))
    assert np.max(np.abs(sol.u[0] - sol.w_lower[0])) <= 1e-14
    assert np.all(sol.u >= 0.0) and np.all(sol.u <= 1.0)
    assert sol.clamp_count == 0 and sol.post_clip_count == 0
    # interior sandwich at this coarse mesh: loose tolerance, right ordering
    sl = slice(10, -10)
    assert np.min(sol.u[:, sl] - sol.w_lower[:, sl]) >= -5e-2
    assert np.min(sol.w_upper[:, sl] - sol.u[:, sl]) >= -5e-2


def test_run_monotone_in_time(kpp):
    sol = run(_config(kpp))
    inc = np.diff(sol.u[:, 10:-10], axis=0)
    assert float(np.min(inc)) >= -1e-8
    assert float(np.median(inc)) > 0.0


def test_run_respects_snapshot_rounding(kpp):
    cfg = _config(kpp, n_snapshots=7, dt=1e-3)
    sol = run(cfg)
    assert sol.n_steps % 7 == 0
    assert sol.dt <= 1e-3 * (1.0 + 1e-12)
    assert len(sol.t) == 8


def test_run_rejects_oversized_dt(kpp):
    with pytest.raises(InvalidSpecError, match="monotonicity bound"):
        run(_config(kpp, dt=2.0))


def test_run_rejects_untileable_grid(kpp):
    with pytest.raises(InvalidSpecError, match="tile"):
        run(_config(kpp, dx=0.07))


def test_run_requires_transition_in_window(kpp):
    cfg = _config(kpp)
    cfg.t0 -= 30.0  # front far left of the slab: seed never reaches 0.5
    cfg.t1 = cfg.t0 + 1.0
    with pytest.raises(InvalidSpecError, match="transition"):
        run(cfg)


def test_run_reports_domain_exhaustion(kpp):
    cfg = _config(kpp, frac=(0.5, 0.95))
    cfg.t1 += 3.0
    with pytest.raises(DomainExhaustedError, match="x_right >="):
        run(cfg)


def test_run_translation_equivariance(kpp):
    # constant coefficients: shifting the slab by delta and time by
    # delta * sqrt(alpha) / lambda reproduces the same front, to mesh accuracy
    delta = 5.0
    lam, alpha = 1.5, kpp["pair"].alpha
    shift_t = delta * math.sqrt(alpha) / lam
    a = run(_config(kpp, xl=-10.0, xr=30.0))
    cfg_b = _config(kpp, xl=-10.0 + delta, xr=30.0 + delta)
    cfg_b.t0 = a.meta["t0"] + shift_t
    cfg_b.t1 = a.meta["t1"] + shift_t
    b = run(cfg_b)
    xa = a.positions()
    xb = b.positions()
    assert np.max(np.abs(xb - xa - delta)) <= a.dx


def test_run_reaction_off_front_stalls(kpp):
    moving = run(_config(kpp, xl=-10.0, xr=30.0, dx=0.1))
    cfg = _config(kpp, xl=-10.0, xr=30.0, dx=0.1)
    cfg.reaction_scale = 0.0
    cfg.exhaustion_margin = 1e-9  # the control cannot exhaust anything
    still = run(cfg)
    move_d = front_position(moving.x, moving.u[-1]) - front_position(
        moving.x, moving.u[0])
    still_d = front_position(still.x, still.u[-1]) - front_position(
        still.x, still.u[0])
    assert move_d > 2.0
    assert abs(still_d) < 0.5 * move_d


# ---------------------------------------------------------------------------
# diagnostics


def test_front_position_exponential_tail():
    x = np.arange(-2.0, 6.0, 0.005)
    u = np.minimum(np.exp(-x / math.sqrt(2.0)), 1.0)
    pos = front_position(x, u, 0.5)
    assert pos == pytest.approx(math.sqrt(2.0) * math.log(2.0), abs=1e-4)


def test_front_position_takes_rightmost_crossing():
    x = np.array([0.0, 2.0, 4.0])
    u = np.array([0.75, 0.25, 0.75])
    assert front_position(x, u, 0.5) == pytest.approx(3.0, abs=1e-12)


def test_front_position_exact_node():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    u = np.array([0.9, 0.5, 0.1, 0.05])
    assert front_position(x, u, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_front_position_absent():
    x = np.linspace(0.0, 1.0, 11)
    with pytest.raises(FrontAbsentError):
        front_position(x, np.full(11, 0.8), 0.5)


def test_front_position_rejects_nan():
    x = np.linspace(0.0, 1.0, 11)
    u = np.linspace(1.0, 0.0, 11)
    u[3] = np.nan
    with pytest.raises(FrontAbsentError):
        front_position(x, u, 0.5)


def test_front_width_exponential():
    x = np.arange(0.0, 12.0, 0.002)
    w1, ok1 = front_width(x, np.exp(-x), 0.1)
    w2, ok2 = front_width(x, np.exp(-2.0 * x), 0.1)
    assert ok1 and ok2
    assert w1 == pytest.approx(math.log(9.0), abs=1e-3)
    assert w2 == pytest.approx(0.5 * math.log(9.0), abs=1e-3)


def test_front_width_empty_band():
    x = np.linspace(0.0, 1.0, 11)
    w, ok = front_width(x, np.full(11, 0.95), 0.1)
    assert w == 0.0 and not ok


def test_front_width_shrinks_with_eps():
    x = np.arange(0.0, 12.0, 0.002)
    u = np.exp(-x)
    w_wide, _ = front_width(x, u, 0.1)
    w_tight, _ = front_width(x, u, 0.3)
    assert w_tight < w_wide


def test_front_width_rejects_bad_eps():
    x = np.linspace(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        front_width(x, np.exp(-x), 0.7)


def _synthetic_solution(c=2.0, n_times=20):
    x = np.arange(-5.0, 45.0, 0.05)
    t = np.linspace(0.0, 10.0, n_times)
    u = np.stack([1.0 / (1.0 + np.exp(2.0 * (x - c * tt))) for tt in t])
    z = np.zeros_like(u)
    return FrontSolution(x=x, t=t, u=u, w_lower=z, w_upper=np.ones_like(u),
                         dx=0.05, dt=1e-3, n_steps=1, kernel="reference",
                         clamp_count=0, post_clip_count=0)


def test_speed_estimate_exact_translation():
    # positions carry ~1e-8 of interpolation noise from the node offsets
    est = speed_estimate(_synthetic_solution(c=2.0))
    assert est.speed == pytest.approx(2.0, abs=1e-6)
    assert est.drift == pytest.approx(0.0, abs=1e-6)
    assert len(est.positions) == 20


def test_speed_estimate_needs_enough_times():
    with pytest.raises(ValueError, match="10 output times"):
        speed_estimate(_synthetic_solution(n_times=6))


def test_run_speed_near_dispersion_value(kpp):
    # lambda = 1.5 travels at lambda/sqrt(lambda-1) = 2.1213; coarse mesh, so 2%
    sol = run(_config(kpp, xl=-10.0, xr=30.0))
    est = speed_estimate(sol)
    assert est.speed == pytest.approx(1.5 / math.sqrt(0.5), rel=0.02)
    assert abs(est.drift) < 0.05

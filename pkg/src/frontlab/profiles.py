"""Profile transforms: the ODE machinery turning v into sub/super-solutions.

For an admissible gradient-bound constant alpha, set

    c = sqrt(alpha) + 1/sqrt(alpha)      (then c >= 2 sqrt(nu)),

and solve the traveling-wave equation U'' + c U' + g(U) = 0 once with the
upper envelope g1 (super side) and once with the lower envelope g0 (sub
side).  Written in the variable v = e^{-sqrt(alpha) s}, the wave equation
becomes

    alpha v^2 h''(v) - v h'(v) + g(h(v)) = 0,      h(v) = U(-ln(v)/sqrt(alpha)),

which is exactly the identity making w = h(v) a super-solution (g = g1,
h convex) and w_tilde = h_tilde(v) a sub-solution (g = g0, h_tilde concave)
whenever v solves the linearized equation and obeys the gradient bound
v_x^2 <= alpha a v^2.  Convexity of h is equivalent to -U' >= sqrt(alpha)
g1(U) along the trajectory, and both one-sided slope criteria are invariant
regions of the phase plane, entered at the launch point; they are certified
here rather than assumed.

Normalization fixes translation: the decay rates at U = 0 are the roots
sqrt(alpha) and 1/sqrt(alpha) of r^2 - c r + 1 = 0, the trajectory generically
rides the slow one, U ~ A e^{-sqrt(alpha) s}, and the amplitude A fitted from
the tail shifts s so that U e^{sqrt(alpha) s} -> 1.  This makes h'(0) =
h_tilde'(0) = 1, so both transforms mimic the identity where v is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.optimize import brentq

from .errors import NormalizationError, ResolutionError, ThresholdError
from .reaction import EnvelopeFunction, _steepness_ratio

__all__ = ["WaveODESolution", "ProfileTransforms", "wave_speed",
           "solve_super_profile", "solve_sub_profile", "build_transforms"]

U_FLOOR = 1e-10          # integrate until U falls below this
TAIL_FIT_RANGE = (1e-8, 1e-5)  # U-range of the amplitude regression
DS = 5e-3                # sample spacing for interpolant nodes


def wave_speed(alpha: float, nu: float) -> float:
    """c = sqrt(alpha) + 1/sqrt(alpha), admissible only when c >= 2 sqrt(nu).

    The admissibility condition is alpha <= (sqrt(nu) - sqrt(nu-1))^2, the
    profile-side face of the rate threshold: it makes the phase-plane
    triangle invariant for the super profile.
    """
    alpha = float(alpha)
    nu = max(float(nu), 1.0)
    if not (0.0 < alpha < 1.0):
        raise ThresholdError(f"alpha = {alpha:.8g} outside (0, 1); no admissible wave speed")
    cap = (math.sqrt(nu) - math.sqrt(nu - 1.0)) ** 2
    if alpha > cap + 1e-12:
        raise ThresholdError(
            f"alpha = {alpha:.8g} exceeds (sqrt(nu) - sqrt(nu-1))^2 = {cap:.8g} "
            f"for nu = {nu:.8g}; equivalently the rate violates "
            "lambda <= 2 a_min - 2 sqrt(nu-1)/(sqrt(nu)+sqrt(nu-1)) a_max")
    c = math.sqrt(alpha) + 1.0 / math.sqrt(alpha)
    assert c >= 2.0 * math.sqrt(nu) - 1e-12
    return c


# ---------------------------------------------------------------------------
# wave ODE solutions


@dataclass(eq=False)
class WaveODESolution:
    """One trajectory of U'' + c U' + g(U) = 0 sampled from its launch point.

    Raw frame: s starts at 0 at the launch state.  The fitted slow-tail
    amplitude A_tail and the shift s0 = -ln(A_tail)/sqrt(alpha) carry the
    normalization: U(s + ln A_tail/sqrt(alpha)) has unit tail limit, and for
    the super profile s0 is where the normalized solution equals 1.
    """

    s: np.ndarray
    U: np.ndarray
    V: np.ndarray
    c: float
    alpha: float
    tag: str                     # "super" or "sub"
    envelope: EnvelopeFunction
    A_tail: float
    s0: float
    fit_residual: float
    r_plus: Optional[float] = None      # sub only: unstable rate at U = 1
    B_left: Optional[float] = None      # sub only: normalized 1-U amplitude at s -> -inf
    certificates: dict = field(default_factory=dict)
    _interp: object = field(default=None, repr=False)

    @property
    def interp(self):
        if self._interp is None:
            # quintic pieces with ODE-exact derivatives at the nodes: U'' is
            # substituted from the equation itself, so the interpolant's
            # residual vanishes at nodes and stays O(ds^4) between them
            g = self.envelope
            U2 = -self.c * self.V - np.asarray(g(self.U), dtype=float)
            self._interp = BPoly.from_derivatives(
                self.s, np.column_stack([self.U, self.V, U2]))
        return self._interp

    def U_at(self, s):
        return self.interp(s)

    def V_at(self, s):
        return self.interp.derivative()(s)

    def residual_at(self, s):
        """|U'' + c U' + g(U)| from the interpolant's own derivatives."""
        d1 = self.interp.derivative()
        d2 = d1.derivative()
        return np.abs(d2(s) + self.c * d1(s)
                      + np.asarray(self.envelope(self.interp(s)), dtype=float))


def _integrate_wave(g, c: float, y0, alpha: float):
    """Run the phase-plane flow until U drops below the floor."""
    rhs = lambda s, y: (y[1], -c * y[1] - float(g(np.array([y[0]]))[0]))
    hit_floor = lambda s, y: y[0] - U_FLOOR
    hit_floor.terminal = True
    hit_floor.direction = -1
    s_max = 1.5 * math.log(1.0 / U_FLOOR) / math.sqrt(alpha) + 50.0
    sol = solve_ivp(rhs, (0.0, s_max), y0, method="RK45",
                    rtol=1e-12, atol=0.0, dense_output=True, events=hit_floor)
    if not sol.success:
        raise ResolutionError(f"wave integration failed: {sol.message}")
    if sol.t_events[0].size == 0:
        raise ResolutionError(
            f"profile did not reach U = {U_FLOOR:g} within s = {s_max:g}; "
            "trajectory is not connecting to the rest state")
    s_end = float(sol.t_events[0][0])
    n = int(math.ceil(s_end / DS))
    s = np.linspace(0.0, s_end, n + 1)
    U, V = sol.sol(s)
    return s, U, V


def _fit_tail_amplitude(s, U, alpha: float):
    """A with U ~ A e^{-sqrt(alpha) s}: regression with correction channels.

    ln U + sqrt(alpha) s tends to ln A with corrections decaying at relative
    rates built from the fast-minus-slow gap 1/sqrt(alpha) - sqrt(alpha)
    (the fast linear mode) and sqrt(alpha) itself (the quadratic
    self-interaction of the slow mode); both channels and their first
    combinations enter the least-squares basis.  Also guards against the
    trajectory riding the fast rate (then there is no slow amplitude to
    normalize by).
    """
    ra = math.sqrt(alpha)
    lo, hi = TAIL_FIT_RANGE
    mask = (U >= lo) & (U <= hi)
    if np.count_nonzero(mask) < 20:
        raise ResolutionError(
            f"tail window U in [{lo:g}, {hi:g}] holds {np.count_nonzero(mask)} "
            "samples; refine the s-grid")
    st, Ut = s[mask], U[mask]
    slope = (math.log(Ut[-1]) - math.log(Ut[0])) / (st[-1] - st[0])
    rate_gap = 1.0 / ra - ra
    if abs(slope + ra) > max(0.3 * rate_gap, 1e-3):
        raise NormalizationError(
            f"tail decays at rate {-slope:.6g}, not the slow rate "
            f"sqrt(alpha) = {ra:.6g}; the profile is non-generic and cannot "
            "be normalized to unit tail limit")
    y = np.log(Ut) + ra * st
    rho_f, rho_s = rate_gap, ra
    rates = [rho_f, rho_s, 2.0 * rho_f, rho_f + rho_s, 2.0 * rho_s]
    kept = []
    for r in sorted(rates):
        if all(abs(r - k) > 1e-6 * max(r, 1.0) for k in kept):
            kept.append(r)
    cols = [np.ones_like(st)]
    cols += [np.exp(-r * (st - st[0])) for r in kept[:4]]
    basis = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    resid = float(np.max(np.abs(basis @ coef - y)))
    if resid > 1e-2:
        raise ResolutionError(
            f"tail fit residual {resid:.3g} exceeds 1%; the asymptotic regime "
            "is not reached in the fit window")
    return float(math.exp(coef[0])), resid


def _certify_triangle(sol: WaveODESolution, slack: float = 1e-10) -> dict:
    """Containment in T = {V <= 0, U <= 1, V >= -(c/2) U} plus the edge flux."""
    worst = {
        "V_nonpositive": float(np.max(sol.V)),
        "U_below_one": float(np.max(sol.U) - 1.0),
        "above_hypotenuse": float(-np.min(sol.V + 0.5 * sol.c * sol.U)),
    }
    uu = np.linspace(0.0, 1.0, 401)
    flux = 0.25 * sol.c**2 * uu - np.asarray(sol.envelope(uu), dtype=float)
    worst["edge_flux"] = float(-np.min(flux))
    passed = all(w <= slack for w in worst.values())
    return {"passed": passed, "worst": worst, "slack": slack}


def _certify_slope(sol: WaveODESolution, slack: float = 1e-10) -> dict:
    """One-sided slope criterion: -U' >= ra g1(U) (super), <= ra g0(U) (sub).

    Equivalent to convexity/concavity of the transform in v.
    """
    ra = math.sqrt(sol.alpha)
    gU = np.asarray(sol.envelope(sol.U), dtype=float)
    defect = ra * gU - (-sol.V)
    if sol.tag == "sub":
        defect = -defect
    worst = float(np.max(defect))
    return {"passed": bool(worst <= slack), "worst": worst, "slack": slack}


def solve_super_profile(g1: EnvelopeFunction, alpha: float,
                        seed: Optional[tuple] = None) -> WaveODESolution:
    """Super-side wave profile, launched at the contact state.

    The launch (U, U') = (1, -sqrt(alpha) g1(1)) puts the trajectory on the
    boundary of the invariant slope region, so -U' >= sqrt(alpha) g1(U) holds
    along the whole orbit; that is convexity of h.  A custom seed overrides
    the launch state (any state on the same orbit reproduces the same h, up
    to its starting value; used for the autonomy check).
    """
    if g1.side not in ("upper", "reaction"):
        raise ValueError(f"expected an upper envelope, got side = {g1.side!r}")
    nu = _steepness_ratio(g1)
    c = wave_speed(alpha, nu)
    ra = math.sqrt(alpha)
    if seed is None:
        seed = (1.0, -ra * float(g1(np.array([1.0]))[0]))
    s, U, V = _integrate_wave(g1, c, np.asarray(seed, dtype=float), alpha)
    if np.any(np.diff(U) >= 0.0):
        raise ResolutionError("super profile is not strictly decreasing")
    A, resid = _fit_tail_amplitude(s, U, alpha)
    sol = WaveODESolution(s=s, U=U, V=V, c=c, alpha=alpha, tag="super",
                          envelope=g1, A_tail=A, s0=-math.log(A) / ra,
                          fit_residual=resid)
    sol.certificates["triangle"] = _certify_triangle(sol)
    sol.certificates["slope"] = _certify_slope(sol)
    if not sol.certificates["triangle"]["passed"]:
        raise ThresholdError(
            "super profile leaves the phase triangle "
            f"(worst: {sol.certificates['triangle']['worst']}); alpha and nu "
            "are inconsistent with c >= 2 sqrt(nu)")
    return sol


def solve_sub_profile(g0: EnvelopeFunction, alpha: float,
                      delta: float = 1e-6) -> WaveODESolution:
    """Sub-side wave profile, launched off the unstable manifold at U = 1.

    r_plus is the positive root of r^2 + c r + g0'(1) = 0; the seed
    (1 - delta, -r_plus delta) sits on the linearized unstable direction.
    Since r_plus <= sqrt(alpha) |g0'(1)| (a consequence of alpha (1 +
    |g0'(1)|) > 0), the launch is inside the invariant region of the
    concavity criterion -U' <= sqrt(alpha) g0(U).
    """
    if g0.side not in ("lower", "reaction"):
        raise ValueError(f"expected a lower envelope, got side = {g0.side!r}")
    c = wave_speed(alpha, 1.0)
    ra = math.sqrt(alpha)
    m = -float(g0.dg(np.array([1.0]))[0])  # |g0'(1)| when the root at 1 is simple
    if m <= 1e-10:
        raise NormalizationError(
            "g0'(1) vanishes: the rest state u = 1 is degenerate and the "
            "unstable-manifold launch is undefined; supply a lower envelope "
            "with a simple zero at 1")
    r_plus = 0.5 * (-c + math.sqrt(c * c + 4.0 * m))
    seed = np.array([1.0 - delta, -r_plus * delta])
    s, U, V = _integrate_wave(g0, c, seed, alpha)
    if np.any(np.diff(U) >= 0.0):
        raise ResolutionError("sub profile is not strictly decreasing")
    A, resid = _fit_tail_amplitude(s, U, alpha)

    # left-tail amplitude: 1 - U ~ B e^{r_plus s} as s -> -inf, fitted near
    # the launch where 1 - U is still small, then shifted with the
    # normalization (B_norm = B_raw A^{r_plus/sqrt(alpha)})
    one_minus = 1.0 - U
    mask = (one_minus >= 3.0 * delta) & (one_minus <= max(1e-3, 1e3 * delta))
    if np.count_nonzero(mask) < 10:
        raise ResolutionError("left tail of the sub profile is under-resolved")
    st, yt = s[mask], np.log(one_minus[mask]) - r_plus * s[mask]
    basis = np.column_stack([np.ones_like(st), np.exp(r_plus * (st - st[-1]))])
    coef, *_ = np.linalg.lstsq(basis, yt, rcond=None)
    B_raw = math.exp(float(coef[0]))
    B_norm = B_raw * A ** (r_plus / ra)

    sol = WaveODESolution(s=s, U=U, V=V, c=c, alpha=alpha, tag="sub",
                          envelope=g0, A_tail=A, s0=-math.log(A) / ra,
                          fit_residual=resid, r_plus=r_plus, B_left=B_norm)
    sol.certificates["triangle"] = _certify_triangle(sol)
    sol.certificates["slope"] = _certify_slope(sol)
    if not sol.certificates["slope"]["passed"]:
        raise ThresholdError(
            "sub profile violates the concavity criterion "
            f"(worst: {sol.certificates['slope']['worst']:.3e})")
    return sol


# ---------------------------------------------------------------------------
# transforms


@dataclass(eq=False)
class ProfileTransform:
    """Monotone map v -> u built from one wave profile via s = -ln v/sqrt(alpha).

    Evaluation accepts log v (preferred: v spans hundreds of orders of
    magnitude) or v itself.  Below the sampled range the map is the identity
    (tail normalization makes h(v)/v -> 1); above it, the super side
    continues linearly past h = 1 and the sub side follows the analytic
    approach 1 - B v^{-r_plus/sqrt(alpha)}.
    """

    sol: WaveODESolution
    alpha: float

    def __post_init__(self):
        self._ra = math.sqrt(self.alpha)
        self._lnA = math.log(self.sol.A_tail)
        self._s_end = float(self.sol.s[-1])
        # log v at the two ends of the sampled s-range
        self._logv_hi = self._lnA                      # s = 0
        self._logv_lo = self._lnA - self._ra * self._s_end

    def _s_of_logv(self, log_v):
        return (self._lnA - log_v) / self._ra

    def of_log(self, log_v):
        log_v = np.asarray(log_v, dtype=float)
        out = np.empty_like(log_v)
        below = log_v < self._logv_lo
        above = log_v > self._logv_hi
        mid = ~(below | above)
        out[below] = np.exp(log_v[below])
        out[mid] = self.sol.U_at(self._s_of_logv(log_v[mid]))
        if np.any(above):
            out[above] = self._continue_above(log_v[above])
        return out

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        pos = v > 0.0
        with np.errstate(divide="ignore"):
            out[pos] = self.of_log(np.log(v[pos]))
        return out

    def _continue_above(self, log_v):
        raise NotImplementedError

    def prime(self, v):
        """dh/dv = -U'(s) / (sqrt(alpha) v) on the sampled range."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        with np.errstate(divide="ignore"):
            log_v = np.where(v > 0, np.log(np.maximum(v, 1e-300)), -np.inf)
        below = log_v < self._logv_lo
        above = log_v > self._logv_hi
        mid = ~(below | above)
        out[below] = 1.0
        out[mid] = -self.sol.V_at(self._s_of_logv(log_v[mid])) / (self._ra * v[mid])
        out[above] = self._prime_above(v[above], log_v[above])
        return out

    def second(self, v):
        """d2h/dv2 = (U''/alpha + U'/sqrt(alpha)) / v^2 on the sampled range."""
        v = np.asarray(v, dtype=float)
        log_v = np.log(v)
        s = self._s_of_logv(log_v)
        d1 = self.sol.interp.derivative()
        d2 = d1.derivative()
        return (d2(s) / self.alpha + d1(s) / self._ra) / v**2

    def inverse(self, y):
        """v with transform(v) = y, for y inside the sampled value range."""
        y = float(y)
        U = self.sol.U
        if not (U[-1] <= y <= U[0]):
            raise ValueError(f"target {y:g} outside the sampled profile range "
                             f"[{U[-1]:g}, {U[0]:g}]")
        s_star = brentq(lambda s: float(self.sol.U_at(s)) - y,
                        self.sol.s[0], self._s_end, xtol=1e-14)
        return math.exp(self._lnA - self._ra * s_star)


class SuperTransform(ProfileTransform):
    def __post_init__(self):
        super().__post_init__()
        self.v_max = self.sol.A_tail  # where h reaches 1
        g1_at_1 = float(self.sol.envelope(np.array([1.0]))[0])
        self._slope_at_vmax = g1_at_1 / self.v_max

    def _continue_above(self, log_v):
        with np.errstate(over="ignore"):
            v = np.exp(np.minimum(log_v, 700.0))
        return 1.0 + self._slope_at_vmax * (v - self.v_max)

    def _prime_above(self, v, log_v):
        return np.full_like(v, self._slope_at_vmax)


class SubTransform(ProfileTransform):
    def __post_init__(self):
        super().__post_init__()
        self._ln_B = math.log(self.sol.B_left)
        self._p = self.sol.r_plus / self._ra

    def _continue_above(self, log_v):
        return 1.0 - np.exp(self._ln_B - self._p * log_v)

    def _prime_above(self, v, log_v):
        return self._p * np.exp(self._ln_B - (self._p + 1.0) * log_v)

    def inverse(self, y):
        y = float(y)
        if y >= float(self.sol.U[0]):
            # analytic continuation toward the saturation level
            if y >= 1.0:
                raise ValueError("sub transform never reaches 1 at finite v")
            return math.exp((self._ln_B - math.log(1.0 - y)) / self._p)
        return super().inverse(y)


@dataclass(eq=False)
class ProfileTransforms:
    """The matched pair (h, h_tilde) sharing alpha and c."""

    alpha: float
    c: float
    upper: SuperTransform     # h
    lower: SubTransform       # h_tilde
    super_solution: WaveODESolution
    sub_solution: WaveODESolution

    @property
    def v_max(self) -> float:
        return self.upper.v_max

    @property
    def s0(self) -> float:
        return self.super_solution.s0

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "s0": self.s0,
            "A_tail": self.super_solution.A_tail,
            "vmax": self.v_max,
            "sub_A_tail": self.sub_solution.A_tail,
            "sub_B_left": self.sub_solution.B_left,
            "certificates": {
                "triangle": self.super_solution.certificates["triangle"]["passed"],
                "convexity": self.super_solution.certificates["slope"]["passed"],
                "sub_triangle": self.sub_solution.certificates["triangle"]["passed"],
                "concavity": self.sub_solution.certificates["slope"]["passed"],
                "residual_super": self.super_solution.fit_residual,
                "residual_sub": self.sub_solution.fit_residual,
            },
        }


def build_transforms(super_sol: WaveODESolution,
                     sub_sol: WaveODESolution) -> ProfileTransforms:
    """Pair the two wave profiles into the ordered transforms (h_tilde, h)."""
    if super_sol.tag != "super" or sub_sol.tag != "sub":
        raise ValueError("need one super-tagged and one sub-tagged profile")
    if abs(super_sol.alpha - sub_sol.alpha) > 1e-12 or abs(super_sol.c - sub_sol.c) > 1e-12:
        raise ValueError("profiles disagree on alpha or c; solve both at one alpha")
    upper = SuperTransform(sol=super_sol, alpha=super_sol.alpha)
    lower = SubTransform(sol=sub_sol, alpha=sub_sol.alpha)
    return ProfileTransforms(alpha=super_sol.alpha, c=super_sol.c,
                             upper=upper, lower=lower,
                             super_solution=super_sol, sub_solution=sub_sol)

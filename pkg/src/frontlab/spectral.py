"""Generalized eigenfunctions of the linearization at the unstable state.

The linearization of u_t = u_xx + f(x, u) at u = 0 is L = d_xx + a(x) with
a = f_u(x, 0).  Its spectral top lambda0 = sup sigma(L) lies in [a_minus,
a_plus].  For every rate lambda > lambda0 there is a unique positive solution
of

    phi'' + a(x) phi = lambda phi,     phi(0) = 1,

decaying as x -> +infinity and growing as x -> -infinity.  These carry the
whole construction: the front ansatz is built from v(t, x) = e^{lambda t}
phi(x), and the profile transforms rely on the gradient bound

    phi'(x)^2 <= alpha a(x) phi(x)^2,    alpha = 1 - (2 a_minus - lambda)/a_plus,

and on the doubling length L with phi(x) >= 2 phi(y) whenever y - x >= L.

lambda0 is approximated by Dirichlet truncation (monotone from below) with
Richardson extrapolation in the mesh; phi by backward shooting from the right
end, where the decaying mode is the stable direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .errors import NoDecayingSolutionError, ThresholdError, WindowError
from .linearized import LinearizedSolution
from .reaction import ReactionSpec, alpha_for, coefficient_field

__all__ = ["SpectralBound", "Eigenpair", "sup_spectrum", "eigenfunction",
           "doubling_length", "superpose"]


# ---------------------------------------------------------------------------
# sup of the spectrum


@dataclass(frozen=True)
class SpectralBound:
    """Estimate of lambda0 = sup sigma(d_xx + a) with its convergence record."""

    lambda0: float
    window: tuple
    dx: float
    history: tuple  # ((dx, raw estimate), ..., ("richardson", value))


def _auto_window(spec: ReactionSpec, minimum: float = 100.0) -> tuple:
    """Window on which truncation effects are negligible for lambda0.

    Fields settling to a limit get a window where |a - limit| <= 1e-6 at the
    ends (then doubled); fields without a known limit get the default span.
    """
    a = spec.a
    if a.asymptote is not None:
        scale = max(abs(a.asymptote), 1.0)
        X = 1.0
        while X < 1e4:
            edge = max(abs(float(a(np.array([X]))[0]) - a.asymptote),
                       abs(float(a(np.array([-X]))[0]) - a.asymptote))
            if edge <= 1e-6 * scale:
                break
            X *= 1.5
        X = max(2.0 * X, minimum)
    else:
        X = max(minimum, 200.0)
    return (-X, X)


def _dirichlet_top(spec: ReactionSpec, window, h: float) -> float:
    """Largest eigenvalue of the symmetric FD operator with Dirichlet ends."""
    lo, hi = window
    n = int(round((hi - lo) / h))
    x = np.linspace(lo, hi, n + 1)[1:-1]
    m = len(x)
    if spec.has_drift_or_diffusion:
        # (A psi')' + q psi' + a psi is unitarily equivalent, for the purpose
        # of the variational quotient, to (A psi')' + (a - q'/2) psi
        A = spec.diffusion or coefficient_field("constant", {"value": 1.0})
        q = spec.drift or coefficient_field("constant", {"value": 0.0})
        xh = np.linspace(lo, hi, n + 1)
        A_half = np.asarray(A(0.5 * (xh[:-1] + xh[1:])), dtype=float)
        pot = np.asarray(spec.a(x), dtype=float) - 0.5 * np.asarray(q.derivative(x), dtype=float)
        d = -(A_half[:-1] + A_half[1:]) / h**2 + pot
        e = A_half[1:-1] / h**2
    else:
        d = -2.0 / h**2 + np.asarray(spec.a(x), dtype=float)
        e = np.full(m - 1, 1.0 / h**2)
    w = eigh_tridiagonal(d, e, select="i", select_range=(m - 1, m - 1),
                         eigvals_only=True)
    return float(w[0])


def sup_spectrum(spec: ReactionSpec, window: Optional[tuple] = None,
                 dx: float = 1e-2) -> SpectralBound:
    """Top of the spectrum of d_xx + a by Dirichlet truncation.

    The truncated eigenvalue increases to lambda0 as the window grows; the
    mesh error is removed by one Richardson step (the raw estimates converge
    at second order in the mesh).  Since the true top always lies between
    inf a and sup a, the extrapolated value is clamped to that bracket (the
    raw window-truncated values sit below it for constant-like rates).
    """
    if window is None:
        window = _auto_window(spec)
    e1 = _dirichlet_top(spec, window, dx)
    e2 = _dirichlet_top(spec, window, dx / 2.0)
    rich = (4.0 * e2 - e1) / 3.0
    lam0 = min(max(rich, spec.a_minus), spec.a_plus)
    history = ((dx, e1), (dx / 2.0, e2), ("richardson", rich))
    return SpectralBound(lambda0=lam0, window=tuple(window), dx=dx, history=history)


# ---------------------------------------------------------------------------
# eigenfunction by backward shooting


@dataclass(eq=False)
class Eigenpair:
    """Positive solution of phi'' + a phi = lambda phi with phi(0) = 1.

    phi decays to the right and grows to the left, so values are kept both in
    linear scale (phi, dphi; may overflow to inf far left on wide windows)
    and in the robust pair (log_phi, psi = phi'/phi) used by all certificates
    and by the profile transforms.
    """

    lam: float
    x: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    log_phi: np.ndarray
    psi: np.ndarray
    alpha: Optional[float]
    L: Optional[float]
    window: tuple
    dx: float
    lambda0: float
    a_values: np.ndarray
    residual: float = field(default=np.nan)
    grad_margin: float = field(default=np.nan)
    grad_margin_ratio: float = field(default=np.nan)

    @cached_property
    def _log_phi_spline(self):
        return CubicSpline(self.x, self.log_phi)

    @cached_property
    def _psi_spline(self):
        return CubicSpline(self.x, self.psi)

    def log_phi_at(self, x):
        return self._log_phi_spline(x)

    def psi_at(self, x):
        return self._psi_spline(x)

    def phi_at(self, x):
        with np.errstate(over="ignore"):
            return np.exp(self._log_phi_spline(x))

    def summary(self) -> dict:
        return {"lambda": self.lam, "lambda0": self.lambda0,
                "alpha": self.alpha, "L": self.L,
                "residual": self.residual,
                "grad_margin": self.grad_margin,
                "window": list(self.window), "dx": self.dx}


def _shoot_left(spec: ReactionSpec, lam: float, x_grid: np.ndarray):
    """Integrate phi'' = (lambda - a) phi from the right end to the left.

    The decaying solution is attracting in this direction.  The run is cut
    into segments, each rescaled to unit size on exit, with the accumulated
    log factors folded back in at the end; this keeps the integrator in a
    sane dynamic range on wide windows.
    """
    a = spec.a
    rhs = lambda s, y: (y[1], (lam - float(a(np.array([s]))[0])) * y[0])
    X_hi, X_lo = float(x_grid[-1]), float(x_grid[0])
    rate_end = lam - float(a(np.array([X_hi]))[0])
    if rate_end <= 0:
        raise NoDecayingSolutionError(
            f"lambda = {lam:.8g} does not exceed a({X_hi:g}) = {lam - rate_end:.8g}; "
            "no decaying direction at the right end")
    # growth moving left is at most sqrt(lambda - inf a); cap the factor per segment
    rate_max = math.sqrt(max(lam - spec.a_minus, 1e-4))
    seg_len = max(min(25.0 / rate_max, X_hi - X_lo), 10.0 * (x_grid[1] - x_grid[0]))

    n = len(x_grid)
    log_phi = np.empty(n)
    psi = np.empty(n)
    y = np.array([1.0, -math.sqrt(rate_end)])
    offset = 0.0
    right = X_hi
    i_hi = n - 1  # next grid index to fill, moving down
    while right > X_lo:
        left = max(right - seg_len, X_lo)
        sol = solve_ivp(rhs, (right, left), y, method="RK45",
                        rtol=1e-12, atol=0.0, dense_output=True)
        if not sol.success:
            raise NoDecayingSolutionError(f"integration failed on [{left:g}, {right:g}]: {sol.message}")
        i_lo = int(np.searchsorted(x_grid, left, side="left"))
        pts = x_grid[i_lo:i_hi + 1]
        vals = sol.sol(pts)
        if np.any(vals[0] <= 0.0):
            bad = pts[vals[0] <= 0.0][-1]
            raise NoDecayingSolutionError(
                f"phi loses positivity near x = {bad:g}; lambda = {lam:.8g} "
                "is at or below the spectral top")
        log_phi[i_lo:i_hi + 1] = np.log(vals[0]) + offset
        psi[i_lo:i_hi + 1] = vals[1] / vals[0]
        y = sol.y[:, -1]
        if y[0] <= 0.0:
            raise NoDecayingSolutionError(
                f"phi loses positivity near x = {left:g}; lambda = {lam:.8g} "
                "is at or below the spectral top")
        scale = abs(y[0])
        offset += math.log(scale)
        y = y / scale
        right = left
        i_hi = i_lo - 1 if i_lo > 0 else 0
        if i_lo == 0:
            break
    return log_phi, psi


def _five_point_residual(log_phi, psi, a_vals, lam, h):
    """sup of |phi'' + (a - lambda) phi| / (lambda max(|phi|_loc)) on the grid.

    Works on ratios phi(x+kh)/phi(x) = exp(log phi differences), so the scale
    of phi never enters; the second derivative uses the fourth-order five
    point stencil, keeping the discretization error well below the ODE
    integration error.
    """
    lp = log_phi
    d1p = lp[3:-1] - lp[2:-2]
    d1m = lp[1:-3] - lp[2:-2]
    d2p = lp[4:] - lp[2:-2]
    d2m = lp[:-4] - lp[2:-2]
    with np.errstate(over="ignore"):
        e1p, e1m, e2p, e2m = np.exp(d1p), np.exp(d1m), np.exp(d2p), np.exp(d2m)
    second = (-e2p + 16.0 * e1p - 30.0 + 16.0 * e1m - e2m) / (12.0 * h * h)
    res = np.abs(second + a_vals[2:-2] - lam)
    loc = np.maximum(np.maximum(e1p, e1m), 1.0)
    return float(np.max(res / (lam * loc)))


def eigenfunction(spec: ReactionSpec, lam: float, window: Optional[float] = None,
                  dx: float = 1e-2, lambda0: Optional[float] = None,
                  margin_factor: float = 1e-6) -> Eigenpair:
    """Build phi_lambda on [-X, X] with phi(0) = 1.

    window is the half-width X; by default X = 30 / sqrt(lambda - lambda0),
    capped at 200, which resolves the slowest exponential scale in play.
    Raises NoDecayingSolutionError when lambda fails to clear the spectral
    top by the relative margin.
    """
    if lambda0 is None:
        lambda0 = sup_spectrum(spec).lambda0
    if lam <= lambda0 + margin_factor * abs(lambda0):
        raise NoDecayingSolutionError(
            f"lambda = {lam:.8g} does not exceed the spectral top estimate "
            f"{lambda0:.8g} by the required margin {margin_factor:g}")
    if window is None:
        X = min(30.0 / math.sqrt(lam - lambda0), 200.0)
    else:
        X = float(window)
    n_half = max(int(round(X / dx)), 10)
    X = n_half * dx
    x = np.linspace(-X, X, 2 * n_half + 1)

    log_phi, psi = _shoot_left(spec, lam, x)
    i0 = n_half  # x[i0] == 0
    log_phi = log_phi - log_phi[i0]
    with np.errstate(over="ignore"):
        phi = np.exp(log_phi)
    dphi = psi * phi
    a_vals = np.asarray(spec.a(x), dtype=float)

    residual = _five_point_residual(log_phi, psi, a_vals, lam, dx)

    try:
        alpha = alpha_for(spec, lam)
    except ThresholdError:
        alpha = None  # lambda >= 2 a_minus: phi exists but the bound is vacuous
    grad_margin = np.nan
    grad_margin_ratio = np.nan
    if alpha is not None:
        grad_margin_ratio = float(np.max(psi**2 - alpha * a_vals))
        # same inequality scaled by phi^2 / max phi^2 per the certificate form
        with np.errstate(over="ignore", under="ignore"):
            phihat2 = np.exp(2.0 * (log_phi - np.max(log_phi)))
        grad_margin = float(np.max((psi**2 - alpha * a_vals) * phihat2)
                            / np.max(a_vals * phihat2))

    pair = Eigenpair(lam=lam, x=x, phi=phi, dphi=dphi, log_phi=log_phi, psi=psi,
                     alpha=alpha, L=None, window=(-X, X), dx=dx, lambda0=lambda0,
                     a_values=a_vals, residual=residual,
                     grad_margin=grad_margin, grad_margin_ratio=grad_margin_ratio)
    try:
        pair.L = doubling_length(pair)
    except WindowError:
        pair.L = None  # window certifies no doubling distance; callers needing L re-raise
    return pair


def doubling_length(pair: Eigenpair) -> float:
    """Least grid distance L with phi(x) >= 2 phi(x + L) for every grid x."""
    lp = pair.log_phi
    n = len(lp)
    ln2 = math.log(2.0)
    # the certificate is not a priori monotone in m, so scan from below
    for m in range(1, n):
        if np.min(lp[:-m] - lp[m:]) >= ln2:
            return m * pair.dx
    raise WindowError(
        f"no doubling distance within the window [{pair.window[0]:g}, {pair.window[1]:g}]; "
        "enlarge the window")


# ---------------------------------------------------------------------------
# superpositions (finite non-negative combinations of rates)


def superpose(pairs_weights) -> LinearizedSolution:
    """Combine (Eigenpair, weight) terms into v(t,x) = sum w e^{lambda t} phi(x).

    Weights must be non-negative with at least one positive; all pairs must
    share one grid.  The combined gradient bound uses alpha of the largest
    rate, the doubling length the max over contributing terms.
    """
    items = [(p, float(w)) for p, w in pairs_weights]
    if not items:
        raise ValueError("superpose needs at least one (pair, weight) term")
    if any(w < 0 for _, w in items):
        raise ValueError("superpose weights must be non-negative")
    items = [(p, w) for p, w in items if w > 0]
    if not items:
        raise ValueError("superpose weights must not all vanish")
    x0 = items[0][0].x
    for p, _ in items[1:]:
        if len(p.x) != len(x0) or not np.allclose(p.x, x0, rtol=0, atol=1e-14):
            raise ValueError("superpose requires a common grid for all terms")
    k_max = max(range(len(items)), key=lambda k: items[k][0].lam)
    top = items[k_max][0]
    L = max(p.L for p, _ in items if p.L is not None)
    return LinearizedSolution(
        lams=np.array([p.lam for p, _ in items]),
        weights=np.array([w for _, w in items]),
        log_phis=[p.log_phi for p, _ in items],
        psis=[p.psi for p, _ in items],
        x=x0,
        alpha=top.alpha,
        L=L,
        window=top.window,
        lambda_top=top.lam,
    )

"""Front-like solutions of the linearized equation and their envelope fields.

A finite non-negative combination of generalized eigenfunctions,

    v(t, x) = sum_k w_k e^{lambda_k t} phi_k(x),

solves v_t = v_xx + a(x) v exactly and decays to 0 as x -> +infinity while
blowing up as x -> -infinity.  Composing v with the profile transforms gives
the ordered pair of comparison fields

    w_tilde(t, x) = h_tilde(v(t, x))   (subsolution, increasing in t),
    w(t, x)       = min{h(v(t, x)), 1} (supersolution),

which sandwich an actual front.  Since v ranges over dozens of orders of
magnitude across a window, every evaluation here runs through log v and the
logarithmic derivative v_x / v; transforms consume log v directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from .errors import WindowError

__all__ = ["LinearizedSolution", "EnvelopeFields", "evaluate_envelopes",
           "gradient_certificate"]


@dataclass(eq=False)
class LinearizedSolution:
    """v(t, x) = sum_k w_k e^{lambda_k t} phi_k(x) on a common grid.

    alpha and the doubling length L are those certified for the largest rate
    (a combination inherits the gradient bound of its top rate).
    """

    lams: np.ndarray
    weights: np.ndarray
    log_phis: list
    psis: list
    x: np.ndarray
    alpha: Optional[float]
    L: float
    window: tuple
    lambda_top: float

    @classmethod
    def from_eigenpair(cls, pair, weight: float = 1.0):
        return cls(lams=np.array([pair.lam]), weights=np.array([float(weight)]),
                   log_phis=[pair.log_phi], psis=[pair.psi], x=pair.x,
                   alpha=pair.alpha, L=pair.L, window=pair.window,
                   lambda_top=pair.lam)

    @cached_property
    def _lp_splines(self):
        return [CubicSpline(self.x, lp) for lp in self.log_phis]

    @cached_property
    def _psi_splines(self):
        return [CubicSpline(self.x, ps) for ps in self.psis]

    def _check_window(self, x):
        lo, hi = self.window
        xmin, xmax = float(np.min(x)), float(np.max(x))
        if xmin < lo - 1e-12 or xmax > hi + 1e-12:
            raise WindowError(
                f"requested x range [{xmin:g}, {xmax:g}] leaves the eigenfunction "
                f"window [{lo:g}, {hi:g}]")

    def _terms(self, t, x):
        """log of each term w_k e^{lambda_k t} phi_k(x), stacked over k."""
        x = np.asarray(x, dtype=float)
        self._check_window(x)
        return np.stack([np.log(w) + lam * t + s(x)
                         for w, lam, s in zip(self.weights, self.lams, self._lp_splines)])

    def log_v(self, t, x):
        return logsumexp(self._terms(t, x), axis=0)

    def v(self, t, x):
        with np.errstate(over="ignore"):
            return np.exp(self.log_v(t, x))

    def _ratios(self, t, x):
        """Term shares r_k = term_k / v; each row sums to 1."""
        terms = self._terms(t, x)
        return np.exp(terms - logsumexp(terms, axis=0))

    def log_slope(self, t, x):
        """v_x / v."""
        x = np.asarray(x, dtype=float)
        r = self._ratios(t, x)
        psis = np.stack([s(x) for s in self._psi_splines])
        return np.sum(r * psis, axis=0)

    def v_x(self, t, x):
        return self.v(t, x) * self.log_slope(t, x)

    def rate(self, t, x):
        """v_t / v = weighted average of the rates."""
        r = self._ratios(t, np.asarray(x, dtype=float))
        return np.sum(r * self.lams[:, None], axis=0)

    def v_t(self, t, x):
        return self.v(t, x) * self.rate(t, x)

    def pde_residual(self, a_fn: Callable, t: float, x: np.ndarray,
                     h: float = 1e-3) -> float:
        """sup |v_t - v_xx - a v| / (lambda_top max(v)_loc) on the sample.

        v_t is exact (rates are explicit); v_xx comes from a five point
        stencil evaluated through ratios v(x + k h)/v(x), so the answer is
        scale-free.
        """
        x = np.asarray(x, dtype=float)
        lv0 = self.log_v(t, x)
        with np.errstate(over="ignore"):
            e = {k: np.exp(self.log_v(t, x + k * h) - lv0)
                 for k in (-2, -1, 1, 2)}
        second = (-e[2] + 16.0 * e[1] - 30.0 + 16.0 * e[-1] - e[-2]) / (12.0 * h * h)
        res = np.abs(self.rate(t, x) - second - np.asarray(a_fn(x), dtype=float))
        loc = np.maximum(np.maximum(e[1], e[-1]), 1.0)
        return float(np.max(res / (self.lambda_top * loc)))


# ---------------------------------------------------------------------------
# envelope fields


@dataclass(eq=False)
class EnvelopeFields:
    """Lazily evaluated comparison pair w_tilde = h_tilde(v), w = min{h(v), 1}.

    Rule objects rather than arrays: the simulator asks for boundary traces
    at whatever times its stepping produces.
    """

    v: LinearizedSolution
    lower_transform: object   # h_tilde, consumed via .of_log
    upper_transform: object   # h

    def lower(self, t, x):
        return self.lower_transform.of_log(self.v.log_v(t, x))

    def upper(self, t, x):
        return np.minimum(self.upper_transform.of_log(self.v.log_v(t, x)), 1.0)

    def lower_time_derivative_sign(self, t, x, dt: float = 1e-6):
        """Sign proxy for w_tilde_t = h_tilde'(v) v_t >= 0."""
        return self.lower(t + dt, x) - self.lower(t, x)


def evaluate_envelopes(fields: EnvelopeFields, t_pts, x_pts):
    """Sample w_tilde and min{w, 1} on a slab; both land in [0, 1]."""
    t_pts = np.atleast_1d(np.asarray(t_pts, dtype=float))
    x_pts = np.asarray(x_pts, dtype=float)
    lower = np.stack([fields.lower(t, x_pts) for t in t_pts])
    upper = np.stack([fields.upper(t, x_pts) for t in t_pts])
    return lower, upper


def gradient_certificate(v: LinearizedSolution, t_pts, x_pts,
                         a_fn: Callable, alpha: Optional[float] = None,
                         A_fn: Optional[Callable] = None,
                         slack: float = 1e-10) -> dict:
    """Check A(x) v_x^2 <= alpha a v^2 on the slab (A = 1 by default).

    Everything is divided by v^2, so the test is (v_x/v)^2 A <= alpha a
    pointwise.  Returns the worst margin, its location, and the verdict;
    a failure voids the comparison argument downstream, so callers should
    treat passed=False as fatal.
    """
    alpha = v.alpha if alpha is None else alpha
    if alpha is None:
        raise ValueError("no gradient-bound constant attached to this solution")
    t_pts = np.atleast_1d(np.asarray(t_pts, dtype=float))
    x_pts = np.asarray(x_pts, dtype=float)
    a_vals = np.asarray(a_fn(x_pts), dtype=float)
    A_vals = np.ones_like(x_pts) if A_fn is None else np.asarray(A_fn(x_pts), dtype=float)
    worst = -np.inf
    where = (float(t_pts[0]), float(x_pts[0]))
    for t in t_pts:
        slope = v.log_slope(t, x_pts)
        margin = A_vals * slope**2 - alpha * a_vals
        i = int(np.argmax(margin))
        if margin[i] > worst:
            worst = float(margin[i])
            where = (float(t), float(x_pts[i]))
    scale = float(np.max(alpha * a_vals))
    return {"passed": bool(worst <= slack * scale), "worst_margin": worst,
            "scale": scale, "slack": slack * scale,
            "location": where, "alpha": alpha}

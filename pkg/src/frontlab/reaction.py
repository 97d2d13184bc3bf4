"""Reaction data for u_t = u_xx + f(x, u) on the monostable interval [0, 1].

A reaction is admissible when f(x, 0) = f(x, 1) = 0, f >= 0, and f is pinched
between multiples of two envelope functions of u alone,

    a(x) g0(u) <= f(x, u) <= a(x) g1(u),

where a(x) = f_u(x, 0) is positive and bounded.  The lower envelope satisfies
g0(0) = g0(1) = 0, g0 > 0 on (0, 1), g0'(0) = 1, g0' <= 1; the upper envelope
satisfies g1(0) = 0, g1'(0) = 1, g1' >= 1.  The steepness ratio

    nu = sup_{u in (0, 1]} g1(u) / u >= 1

controls how far the growth rate of a usable linearized solution may sit above
the reaction's own rates: a rate lambda admits the front construction only if

    lambda <= 2 a_minus - 2 sqrt(nu - 1) / (sqrt(nu) + sqrt(nu - 1)) * a_plus.

This module builds reaction specifications, validates the hypotheses on a
dense grid, and evaluates that threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import EnvelopeError, InvalidSpecError, ThresholdError

__all__ = [
    "EnvelopeFunction",
    "CoefficientField",
    "ReactionSpec",
    "ValidationReport",
    "coefficient_field",
    "lower_envelope",
    "upper_envelope",
    "build_reaction",
    "validate_spec",
    "threshold_rhs",
    "alpha_for",
    "drift_gate_rhs",
]


# ---------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class EnvelopeFunction:
    """One-sided envelope g(u) together with its derivative."""

    name: str
    side: str  # "lower" or "upper"
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]

    def __call__(self, u):
        return self.g(u)


def lower_envelope(kind: str = "logistic", table=None) -> EnvelopeFunction:
    """Built-in lower envelopes: 'logistic' is u(1-u); 'tabulated' interpolates."""
    if kind == "logistic":
        return EnvelopeFunction("logistic", "lower",
                                lambda u: u * (1.0 - u),
                                lambda u: 1.0 - 2.0 * u)
    if kind == "tabulated":
        return _tabulated_envelope("lower", table)
    raise InvalidSpecError(f"unknown lower envelope kind {kind!r}")


def upper_envelope(kind: str = "linear", beta: float = 0.0, table=None) -> EnvelopeFunction:
    """Built-in upper envelopes: 'linear' is u; 'superlinear' is u(1 + beta*u)."""
    if kind == "linear":
        return EnvelopeFunction("linear", "upper",
                                lambda u: np.asarray(u, dtype=float) + 0.0,
                                lambda u: np.ones_like(np.asarray(u, dtype=float)))
    if kind == "superlinear":
        b = float(beta)
        if b < 0:
            raise InvalidSpecError("superlinear envelope needs beta >= 0")
        return EnvelopeFunction(f"superlinear(beta={b:g})", "upper",
                                lambda u: u * (1.0 + b * u),
                                lambda u: 1.0 + 2.0 * b * u)
    if kind == "tabulated":
        return _tabulated_envelope("upper", table)
    raise InvalidSpecError(f"unknown upper envelope kind {kind!r}")


def _tabulated_envelope(side: str, table) -> EnvelopeFunction:
    if table is None:
        raise InvalidSpecError("tabulated envelope needs (u, g) samples")
    u, g = np.asarray(table[0], dtype=float), np.asarray(table[1], dtype=float)
    if u.ndim != 1 or u.shape != g.shape or u.size < 4:
        raise InvalidSpecError("tabulated envelope needs matching 1-d samples, >= 4 points")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(g))):
        raise InvalidSpecError("tabulated envelope has non-finite samples")
    if np.any(np.diff(u) <= 0):
        raise InvalidSpecError("tabulated envelope abscissae must increase")
    # shape-preserving interpolation keeps g monotone between samples
    interp = PchipInterpolator(u, g)
    dinterp = interp.derivative()
    return EnvelopeFunction(f"tabulated[{side}]", side, interp, dinterp)


# ---------------------------------------------------------------------------
# coefficient fields


@dataclass(frozen=True)
class CoefficientField:
    """Scalar field on the line, e.g. the rate a(x) or a drift q(x)."""

    kind: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]
    dfn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    asymptote: Optional[float] = None  # value approached as |x| -> infinity

    def __call__(self, x):
        return self.fn(x)

    def derivative(self, x):
        if self.dfn is not None:
            return self.dfn(x)
        x = np.asarray(x, dtype=float)
        h = 1e-6
        return (self.fn(x + h) - self.fn(x - h)) / (2.0 * h)


def coefficient_field(kind: str, params: Optional[dict] = None) -> CoefficientField:
    """Field builders used by reaction specs and scenario configs.

    kinds: 'constant' {value}; 'gaussian_bump' {base, amp, width};
    'periodic' {base, amp, freq}; 'indicator' {base, amp, half_width}.
    """
    p = dict(params or {})
    if kind == "constant":
        v = float(p.get("value", 1.0))
        return CoefficientField(kind, {"value": v},
                                lambda x: np.full_like(np.asarray(x, dtype=float), v),
                                lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                                asymptote=v)
    if kind == "gaussian_bump":
        base = float(p.get("base", 1.0))
        amp = float(p.get("amp", 0.5))
        width = float(p.get("width", 1.0))
        if width <= 0:
            raise InvalidSpecError("gaussian_bump needs width > 0")
        return CoefficientField(kind, {"base": base, "amp": amp, "width": width},
                                lambda x: base + amp * np.exp(-(np.asarray(x, dtype=float) / width) ** 2),
                                lambda x: amp * np.exp(-(np.asarray(x, dtype=float) / width) ** 2)
                                * (-2.0 * np.asarray(x, dtype=float) / width**2),
                                asymptote=base)
    if kind == "periodic":
        base = float(p.get("base", 1.0))
        amp = float(p.get("amp", 0.0))
        freq = float(p.get("freq", 1.0))
        return CoefficientField(kind, {"base": base, "amp": amp, "freq": freq},
                                lambda x: base + amp * np.sin(freq * np.asarray(x, dtype=float)),
                                lambda x: amp * freq * np.cos(freq * np.asarray(x, dtype=float)))
    if kind == "indicator":
        base = float(p.get("base", 1.0))
        amp = float(p.get("amp", 0.5))
        hw = float(p.get("half_width", 1.0))
        return CoefficientField(kind, {"base": base, "amp": amp, "half_width": hw},
                                lambda x: base + amp * (np.abs(np.asarray(x, dtype=float)) <= hw),
                                None,
                                asymptote=base)
    raise InvalidSpecError(f"unknown coefficient field kind {kind!r}")


def _field_bounds(f: CoefficientField, window, n=4001):
    """inf/sup over the window, sampled then refined around the extremum."""
    lo, hi = window
    x = np.linspace(lo, hi, n)
    vals = f(x)
    if not np.all(np.isfinite(vals)):
        bad = x[~np.isfinite(vals)][0]
        raise InvalidSpecError(f"field {f.kind!r} is non-finite at x = {bad:g}")
    imin, imax = int(np.argmin(vals)), int(np.argmax(vals))
    lo_val, hi_val = float(vals[imin]), float(vals[imax])
    for idx, mode in ((imin, "min"), (imax, "max")):
        a = x[max(idx - 1, 0)]
        b = x[min(idx + 1, n - 1)]
        if b > a:
            sign = 1.0 if mode == "min" else -1.0
            res = minimize_scalar(lambda t: sign * float(f(np.array([t]))[0]),
                                  bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-12})
            val = sign * res.fun
            if mode == "min":
                lo_val = min(lo_val, float(val))
            else:
                hi_val = max(hi_val, float(val))
    # fields that settle to a limit contribute the limit as a candidate too
    if f.asymptote is not None:
        lo_val = min(lo_val, float(f.asymptote))
        hi_val = max(hi_val, float(f.asymptote))
    return lo_val, hi_val


# ---------------------------------------------------------------------------
# reaction specification


@dataclass
class ReactionSpec:
    """Reaction f(x, u) = a(x) p(u) with its envelope pair and coefficients.

    Optional diffusion A(x) and drift q(x) fields extend the setup to
    u_t = (A u')' + q u' + f(x, u); both default to the plain Laplacian.
    """

    a: CoefficientField
    g0: EnvelopeFunction
    g1: EnvelopeFunction
    p: Callable
    dp: Callable
    kind: str
    beta: float = 0.0
    diffusion: Optional[CoefficientField] = None
    drift: Optional[CoefficientField] = None
    window: tuple = (-60.0, 60.0)
    a_minus: float = field(init=False)
    a_plus: float = field(init=False)
    nu: float = field(init=False)

    def __post_init__(self):
        self.a_minus, self.a_plus = _field_bounds(self.a, self.window)
        if not (np.isfinite(self.a_minus) and self.a_minus > 0):
            raise InvalidSpecError(
                f"rate field must be positive and bounded; got inf a = {self.a_minus:g}")
        self.nu = _steepness_ratio(self.g1)

    # f and its u-derivative, broadcasting over x and u
    def f(self, x, u):
        return self.a(x) * self.p(u)

    def f_u(self, x, u):
        return self.a(x) * self.dp(u)

    def lipschitz_u(self, n=2001) -> float:
        """max |f_u| over x in the window and u in [0, 1]."""
        u = np.linspace(0.0, 1.0, n)
        return self.a_plus * float(np.max(np.abs(self.dp(u))))

    @property
    def has_drift_or_diffusion(self) -> bool:
        return self.diffusion is not None or self.drift is not None


def _steepness_ratio(g1: EnvelopeFunction, n=2001, tol=1e-9) -> float:
    """nu = sup g1(u)/u on (0, 1], sampled then refined by bounded search."""
    u = np.linspace(0.0, 1.0, n)[1:]
    r = np.asarray(g1(u), dtype=float) / u
    if not np.all(np.isfinite(r)):
        raise EnvelopeError("g1(u)/u is non-finite on (0, 1]")
    if np.max(r) > 1e6:
        raise EnvelopeError("g1(u)/u is unbounded near 0; upper envelope must have g1'(0) = 1")
    i = int(np.argmax(r))
    lo = u[max(i - 1, 0)]
    hi = u[min(i + 1, len(u) - 1)]
    best = float(np.max(r))
    if hi > lo:
        res = minimize_scalar(lambda t: -float(g1(np.array([t]))[0]) / t,
                              bounds=(max(lo, 1e-12), hi), method="bounded",
                              options={"xatol": tol})
        best = max(best, float(-res.fun))
    # the ratio tends to g1'(0) = 1 at the origin
    best = max(best, 1.0)
    if best < 1.0 - 1e-9:
        raise EnvelopeError(f"nu = {best:.12g} < 1; upper envelope violates g1' >= 1")
    return best


def build_reaction(kind: str = "kpp",
                   beta: float = 1.0,
                   a_kind: str = "constant",
                   a_params: Optional[dict] = None,
                   g0_kind: str = "logistic",
                   g1_kind: Optional[str] = None,
                   table=None,
                   diffusion: Optional[CoefficientField] = None,
                   drift: Optional[CoefficientField] = None,
                   window: tuple = (-60.0, 60.0)) -> ReactionSpec:
    """Assemble a ReactionSpec from config-level names.

    kinds: 'kpp' is f = a(x) u(1-u); 'cubic' is f = a(x) u(1-u)(1+beta*u);
    'tabulated' interpolates p(u) from (u, p) samples.
    """
    a = coefficient_field(a_kind, a_params)
    if kind == "kpp":
        p = lambda u: u * (1.0 - u)
        dp = lambda u: 1.0 - 2.0 * u
        g1 = upper_envelope(g1_kind or "linear", beta=0.0)
        beta_eff = 0.0
    elif kind == "cubic":
        b = float(beta)
        if b < 0:
            raise InvalidSpecError("cubic reaction needs beta >= 0")
        # p = u + (b-1)u^2 - b u^3
        p = lambda u: u * (1.0 - u) * (1.0 + b * u)
        dp = lambda u: 1.0 + 2.0 * (b - 1.0) * u - 3.0 * b * u**2
        g1 = upper_envelope(g1_kind or "superlinear", beta=b)
        beta_eff = b
    elif kind == "tabulated":
        if table is None:
            raise InvalidSpecError("tabulated reaction needs (u, p) samples")
        env = _tabulated_envelope("reaction", table)
        p, dp = env.g, env.dg
        g1 = upper_envelope(g1_kind or "linear", beta=beta)
        beta_eff = float(beta)
    else:
        raise InvalidSpecError(f"unknown reaction kind {kind!r}")
    g0 = lower_envelope(g0_kind)
    return ReactionSpec(a=a, g0=g0, g1=g1, p=p, dp=dp, kind=kind, beta=beta_eff,
                        diffusion=diffusion, drift=drift, window=window)


# ---------------------------------------------------------------------------
# validation


@dataclass
class CheckEntry:
    name: str
    passed: bool
    worst: Optional[float] = None
    location: Optional[tuple] = None
    note: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "worst": self.worst, "location": self.location, "note": self.note}


@dataclass
class ValidationReport:
    entries: list
    gap_integral: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> CheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed,
                "gap_integral": self.gap_integral,
                "entries": [e.to_dict() for e in self.entries]}

    def __str__(self):
        lines = []
        for e in self.entries:
            mark = "ok" if e.passed else "FAIL"
            extra = f" worst={e.worst:.3e}" if e.worst is not None else ""
            lines.append(f"  [{mark}] {e.name}{extra} {e.note}".rstrip())
        return "\n".join(lines)


def _refine_envelope_margin(spec, x_pt, u_lo, u_hi, side):
    """Dense local re-check of one envelope inequality in a u-bracket."""
    uu = np.linspace(u_lo, u_hi, 201)
    ax = float(spec.a(np.array([x_pt]))[0])
    fv = ax * np.asarray(spec.p(uu), dtype=float)
    if side == "lower":
        margin = ax * np.asarray(spec.g0(uu), dtype=float) - fv
    else:
        margin = fv - ax * np.asarray(spec.g1(uu), dtype=float)
    i = int(np.argmax(margin))
    return float(margin[i]), float(uu[i])


def validate_spec(spec: ReactionSpec, nx: int = 2001, nu_pts: int = 1001,
                  strict: bool = False) -> ValidationReport:
    """Check the monostable and envelope hypotheses on a dense grid.

    Returns a report; with strict=True, raises EnvelopeError or
    InvalidSpecError on the first failed group.
    """
    lo, hi = spec.window
    x = np.linspace(lo, hi, nx)
    u = np.linspace(0.0, 1.0, nu_pts)
    entries = []

    ax = np.asarray(spec.a(x), dtype=float)
    if not np.all(np.isfinite(ax)):
        bad = x[~np.isfinite(ax)][0]
        raise InvalidSpecError(f"a(x) non-finite at x = {bad:g}")
    pu = np.asarray(spec.p(u), dtype=float)
    if not np.all(np.isfinite(pu)):
        bad = u[~np.isfinite(pu)][0]
        raise InvalidSpecError(f"f(x, u) non-finite at u = {bad:g}")

    scale = float(np.max(np.abs(pu))) * spec.a_plus
    z0 = abs(float(spec.p(np.array([0.0]))[0])) * spec.a_plus
    z1 = abs(float(spec.p(np.array([1.0]))[0])) * spec.a_plus
    entries.append(CheckEntry("zeros_at_0_and_1", max(z0, z1) <= 1e-12 * max(scale, 1.0),
                              worst=max(z0, z1)))

    entries.append(CheckEntry("rate_positive_bounded",
                              spec.a_minus > 0 and np.isfinite(spec.a_plus),
                              worst=spec.a_minus,
                              note=f"a_minus={spec.a_minus:.6g} a_plus={spec.a_plus:.6g}"))

    # envelope inequalities on the product grid; f = a(x) p(u) separates,
    # so the margins factor through a(x) > 0 and reduce to u alone
    g0u = np.asarray(spec.g0(u), dtype=float)
    g1u = np.asarray(spec.g1(u), dtype=float)
    low_margin = g0u - pu   # <= 0 wanted
    up_margin = pu - g1u    # <= 0 wanted
    slack = 1e-12
    worst_low = float(np.max(low_margin))
    worst_up = float(np.max(up_margin))
    iu_low = int(np.argmax(low_margin))
    iu_up = int(np.argmax(up_margin))
    # near-violations get a local dense re-check before judging
    if worst_low > -1e-9:
        j0, j1 = max(iu_low - 1, 0), min(iu_low + 1, nu_pts - 1)
        worst_low = max(worst_low,
                        _refine_envelope_margin(spec, 0.0, u[j0], u[j1], "lower")[0] / max(spec.a(np.array([0.0]))[0], 1e-300))
    if worst_up > -1e-9:
        j0, j1 = max(iu_up - 1, 0), min(iu_up + 1, nu_pts - 1)
        worst_up = max(worst_up,
                       _refine_envelope_margin(spec, 0.0, u[j0], u[j1], "upper")[0] / max(spec.a(np.array([0.0]))[0], 1e-300))
    entries.append(CheckEntry("lower_envelope", worst_low <= slack,
                              worst=worst_low, location=(0.0, float(u[iu_low]))))
    entries.append(CheckEntry("upper_envelope", worst_up <= slack,
                              worst=worst_up, location=(0.0, float(u[iu_up]))))

    # envelope shape hypotheses
    h = 1e-6
    dg0_0 = (float(spec.g0(np.array([h]))[0])) / h
    dg1_0 = (float(spec.g1(np.array([h]))[0])) / h
    inner = u[1:-1]
    g0_inner = np.asarray(spec.g0(inner), dtype=float)
    dg0_max = float(np.max(spec.g0.dg(u)))
    dg1_min = float(np.min(spec.g1.dg(u)))
    entries.append(CheckEntry("lower_envelope_shape",
                              abs(float(spec.g0(np.array([0.0]))[0])) <= 1e-12
                              and abs(float(spec.g0(np.array([1.0]))[0])) <= 1e-12
                              and np.all(g0_inner > 0)
                              and dg0_max <= 1.0 + 1e-9
                              and abs(dg0_0 - 1.0) <= 1e-4,
                              worst=dg0_max - 1.0,
                              note=f"g0'(0)={dg0_0:.8f} max g0'={dg0_max:.8f}"))
    entries.append(CheckEntry("upper_envelope_shape",
                              abs(float(spec.g1(np.array([0.0]))[0])) <= 1e-12
                              and dg1_min >= 1.0 - 1e-9
                              and abs(dg1_0 - 1.0) <= 1e-4,
                              worst=1.0 - dg1_min,
                              note=f"g1'(0)={dg1_0:.8f} min g1'={dg1_min:.8f}"))

    entries.append(CheckEntry("steepness_ratio", spec.nu >= 1.0 - 1e-12,
                              worst=spec.nu, note=f"nu={spec.nu:.9f}"))

    # integral of (g1 - g0)/u^2 over (0, 1); the integrand tends to
    # (g1''(0) - g0''(0))/2, estimated by a second-order difference quotient
    gap = lambda t: (float(spec.g1(np.array([t]))[0]) - float(spec.g0(np.array([t]))[0])) / t**2
    delta = 1e-8
    try:
        val, err = quad(gap, delta, 1.0, limit=200)
        hh = 1e-4
        d1 = float(spec.g1(np.array([hh]))[0] - spec.g0(np.array([hh]))[0]) / hh**2
        d2 = float(spec.g1(np.array([2 * hh]))[0] - spec.g0(np.array([2 * hh]))[0]) / (2 * hh) ** 2
        limit0 = 2.0 * d1 - d2
        val += limit0 * delta
        finite = np.isfinite(val) and abs(val) < 1e8
    except Exception:
        val, finite = float("nan"), False
    entries.append(CheckEntry("envelope_gap_integral", finite, worst=val,
                              note=f"value={val:.9g}"))

    if spec.drift is not None:
        gate = drift_gate_rhs(spec)
        q_plus = _field_bounds(spec.drift, spec.window)[1]
        entries.append(CheckEntry("drift_gate", q_plus <= gate + 1e-12,
                                  worst=q_plus - gate,
                                  note=f"needs sup q <= 2 sqrt(inf a A): "
                                       f"sup q = {q_plus:.6g}, 2 sqrt(inf a A) = {gate:.6g}"))
    if spec.diffusion is not None:
        A_minus = _field_bounds(spec.diffusion, spec.window)[0]
        entries.append(CheckEntry("diffusion_positive", A_minus > 0, worst=A_minus))

    report = ValidationReport(entries, gap_integral=val if finite else None)
    if strict and not report.passed:
        failed = [e for e in entries if not e.passed]
        e = failed[0]
        cls = EnvelopeError if "envelope" in e.name or e.name in ("steepness_ratio", "drift_gate") else InvalidSpecError
        loc = f" at (x, u) = {e.location}" if e.location else ""
        raise cls(f"validation failed: {e.name} worst={e.worst}{loc}; {e.note}")
    return report


# ---------------------------------------------------------------------------
# existence threshold


def _nu_correction(nu: float) -> float:
    nu = max(float(nu), 1.0)
    return 2.0 * math.sqrt(nu - 1.0) / (math.sqrt(nu) + math.sqrt(nu - 1.0))


def drift_gate_rhs(spec: ReactionSpec) -> float:
    """Admissible drift ceiling 2 sqrt(inf aA) for specs with a drift term."""
    A = spec.diffusion or coefficient_field("constant", {"value": 1.0})
    lo, hi = spec.window
    x = np.linspace(lo, hi, 4001)
    aA_min = float(np.min(spec.a(x) * A(x)))
    return 2.0 * math.sqrt(max(aA_min, 0.0))


def _lambda_one(spec: ReactionSpec, n=8001) -> float:
    """inf_x [ a + sqrt((aA)_-) (sqrt((aA)_-) - |q|) / A ]  for drift setups."""
    A = spec.diffusion or coefficient_field("constant", {"value": 1.0})
    q = spec.drift or coefficient_field("constant", {"value": 0.0})
    lo, hi = spec.window
    x = np.linspace(lo, hi, n)
    ax, Ax, qx = spec.a(x), A(x), q(x)
    s = math.sqrt(max(float(np.min(ax * Ax)), 0.0))
    vals = ax + s * (s - np.abs(qx)) / Ax
    i = int(np.argmin(vals))
    best = float(vals[i])
    a_, b_ = x[max(i - 1, 0)], x[min(i + 1, n - 1)]
    if b_ > a_:
        fun = lambda t: float(spec.a(np.array([t]))[0]
                              + s * (s - abs(float(q(np.array([t]))[0]))) / float(A(np.array([t]))[0]))
        res = minimize_scalar(fun, bounds=(a_, b_), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def threshold_rhs(spec: ReactionSpec) -> float:
    """Largest admissible rate: 2 a_minus (or its drift analogue lambda_1)
    minus the steepness correction 2 sqrt(nu-1)/(sqrt(nu)+sqrt(nu-1)) a_plus."""
    if spec.nu < 1.0 - 1e-9:
        raise EnvelopeError(f"nu = {spec.nu} < 1 is inconsistent with the envelope hypotheses")
    if spec.has_drift_or_diffusion:
        gate = drift_gate_rhs(spec)
        q_plus = _field_bounds(spec.drift, spec.window)[1] if spec.drift is not None else 0.0
        if q_plus > gate + 1e-12:
            raise ThresholdError(
                f"drift too strong: sup q = {q_plus:.6g} exceeds 2*sqrt(inf aA) = {gate:.6g}")
        base = _lambda_one(spec)
    else:
        base = 2.0 * spec.a_minus
    return base - _nu_correction(spec.nu) * spec.a_plus


def alpha_for(spec: ReactionSpec, lam: float) -> float:
    """Gradient-bound constant alpha = 1 - (2 a_minus - lambda)/a_plus.

    Drift setups replace 2 a_minus by the variational quantity lambda_1.
    Requires lambda < 2 a_minus (else the bound is vacuous: alpha >= 1).
    """
    base = _lambda_one(spec) if spec.has_drift_or_diffusion else 2.0 * spec.a_minus
    alpha = 1.0 - (base - float(lam)) / spec.a_plus
    if alpha >= 1.0:
        raise ThresholdError(
            f"lambda = {lam:.6g} is not below {'lambda_1' if spec.has_drift_or_diffusion else '2 a_minus'}"
            f" = {base:.6g}; gradient bound degenerates (alpha = {alpha:.6g} >= 1)")
    if alpha <= 0.0:
        raise ThresholdError(f"alpha = {alpha:.6g} <= 0; lambda sits below the usable range")
    return alpha

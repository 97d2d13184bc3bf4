"""Monotone IMEX simulation of u_t = u_xx + f(x, u) seeded by the envelopes.

The construction this laboratory checks is an ordering statement, so the
scheme must preserve order, not merely converge: diffusion is implicit
(backward Euler, tridiagonal M-matrix solve, unconditionally monotone) and
the reaction explicit with dt at most 1/Lip_u(f), which keeps u -> u + dt f
nondecreasing.  Two runs with ordered seeds and ordered boundary traces
then stay nodewise ordered for every step, the discrete shadow of the
comparison principle; for the closed-form reaction families the kernels
arrange the arithmetic so this holds exactly in floating point, not just
in exact arithmetic (see kernels.reference).

Setups with a variable diffusion A(x) and a drift q(x) discretize
(A u')' + q u' in conservation form with harmonic-mean face coefficients;
the drift is centered except where |q| dx / (2 A) > 1 would flip an
off-diagonal sign, and those nodes fall back to first-order upwinding so the
M-matrix property survives.

Runs are seeded with u(t0, x) = w_tilde(t0, x) and forced with Dirichlet
traces u(t, edge) = w_tilde(t, edge) on both ends.  The traces come from a
subsolution, so the truncation biases u downward toward w_tilde but never
below it on the PDE side; verification excludes a boundary layer where that
bias concentrates.

The hot loop lives in kernels/ (compiled when built, NumPy otherwise); this
module builds grids, stencils, traces and time steps, and owns the
diagnostics: front position, front width, speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DomainExhaustedError, FrontAbsentError, InvalidSpecError
from .kernels import reference
from .linearized import EnvelopeFields, evaluate_envelopes
from .reaction import ReactionSpec, coefficient_field

__all__ = [
    "SimulationConfig",
    "FrontSolution",
    "SpeedEstimate",
    "Stepper",
    "build_stencil",
    "step",
    "run",
    "front_position",
    "front_width",
    "speed_estimate",
]


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SimulationConfig:
    """One run: slab, mesh, stepping rule, seeding policy.

    dt defaults to min(dt_factor dx^2, 0.8 / Lip) where Lip is the sampled
    reaction Lipschitz constant with a 20% safety factor; the dx^2 coupling
    is an accuracy choice (backward Euler's O(dt) error then refines at the
    same quadratic rate as the space error), not a stability constraint.
    """

    spec: ReactionSpec
    envelopes: EnvelopeFields
    x_left: float
    x_right: float
    dx: float
    t0: float
    t1: float
    n_snapshots: int = 40
    dt: Optional[float] = None
    dt_factor: float = 16.0
    kernel: str = "auto"
    reaction_scale: float = 1.0
    exhaustion_margin: Optional[float] = None  # default: 10% of the domain
    initial: str = "lower-envelope"
    boundary: str = "lower-envelope"


@dataclass(eq=False)
class FrontSolution:
    """Snapshots u(t_j, x_i) with the companion envelope samples."""

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray          # (n_times, n_nodes)
    w_lower: np.ndarray    # w_tilde on the same slab
    w_upper: np.ndarray    # min{w, 1}
    dx: float
    dt: float
    n_steps: int
    kernel: str
    clamp_count: int
    post_clip_count: int
    meta: dict = field(default_factory=dict)

    def positions(self, level: float = 0.5) -> np.ndarray:
        return np.array([front_position(self.x, row, level) for row in self.u])

    def widths(self, eps: float = 0.1):
        vals, flags = zip(*(front_width(self.x, row, eps) for row in self.u))
        return np.array(vals), np.array(flags, dtype=bool)


# ---------------------------------------------------------------------------
# space operator


def build_stencil(spec: ReactionSpec, x: np.ndarray):
    """Nonnegative flux weights (dlo, dup) of the interior space operator.

    The operator acts as (D w)_i = dlo_i (w_{i-1} - w_i) + dup_i (w_{i+1} - w_i),
    so constants are annihilated exactly (in floating point too) and
    nonnegative weights make I - dt D an M-matrix for every dt > 0.
    """
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    m = len(x) - 2
    if spec.diffusion is None and spec.drift is None:
        w = np.full(m, 1.0 / dx**2)
        return w, w.copy()
    A = spec.diffusion or coefficient_field("constant", {"value": 1.0})
    A_vals = np.asarray(A(x), dtype=float)
    if np.any(A_vals <= 0.0):
        raise InvalidSpecError("diffusion coefficient must be positive on the grid")
    # harmonic-mean faces keep the flux continuous across coefficient jumps
    A_face = 2.0 * A_vals[:-1] * A_vals[1:] / (A_vals[:-1] + A_vals[1:])
    dlo = A_face[:-1] / dx**2
    dup = A_face[1:] / dx**2
    if spec.drift is not None:
        q = np.asarray(spec.drift(x[1:-1]), dtype=float)
        # centered drift splits q/(2 dx) between the two flux weights; where
        # the cell Peclet number |q| dx / (2 A) exceeds 1 that would produce
        # a negative weight, so those nodes use first-order upwinding
        A_min = np.minimum(A_face[:-1], A_face[1:])
        centered = np.abs(q) * dx / (2.0 * A_min) <= 1.0
        qc = np.where(centered, q, 0.0)
        qu = np.where(centered, 0.0, q)
        dup = dup + qc / (2.0 * dx) + np.maximum(qu, 0.0) / dx
        dlo = dlo - qc / (2.0 * dx) + np.maximum(-qu, 0.0) / dx
    if np.any(dlo < 0.0) or np.any(dup < 0.0):
        raise InvalidSpecError("space operator lost the M-matrix property")
    return dlo, dup


def _grid(x_left: float, x_right: float, dx: float) -> np.ndarray:
    n_cells = (x_right - x_left) / dx
    n = int(round(n_cells))
    if n < 4 or abs(n_cells - n) > 1e-8 * max(n, 1):
        raise InvalidSpecError(
            f"dx = {dx:g} does not tile [{x_left:g}, {x_right:g}] into whole cells")
    return x_left + dx * np.arange(n + 1)


def _kind_info(spec: ReactionSpec):
    if spec.kind == "kpp":
        return reference.KIND_KPP, 0.0, None
    if spec.kind == "cubic":
        return reference.KIND_CUBIC, float(spec.beta), None
    return reference.KIND_CALLBACK, 0.0, spec.p


def _resolve_kernel(spec: ReactionSpec, name: str):
    kind, beta, p_fn = _kind_info(spec)
    if p_fn is not None:
        if name == "compiled":
            raise InvalidSpecError(
                "reactions outside the closed-form families run on the reference kernel")
        return "reference", reference.imex_loop, kind, beta, p_fn
    tag, loop = kernels.resolve(name)
    return tag, loop, kind, beta, None


# ---------------------------------------------------------------------------
# stepping


class Stepper:
    """Single-step driver over the same kernel loops run() uses.

    boundary is a callable t -> (left value, right value); it is sampled at
    the end time of each step, matching the implicit treatment of diffusion.
    reaction_scale = 0 switches the reaction off for control experiments.
    """

    def __init__(self, spec: ReactionSpec, x, dt: float,
                 boundary: Callable[[float], tuple],
                 kernel: str = "auto", reaction_scale: float = 1.0):
        self.spec = spec
        self.x = np.asarray(x, dtype=float)
        if len(self.x) < 4:
            raise InvalidSpecError("grid needs at least 4 nodes")
        self.dt = float(dt)
        self.boundary = boundary
        self.reaction_scale = float(reaction_scale)
        lip = 1.2 * abs(self.reaction_scale) * spec.lipschitz_u()
        self.dt_bound = math.inf if lip == 0.0 else 1.0 / lip
        if self.dt > self.dt_bound * (1.0 + 1e-12):
            raise InvalidSpecError(
                f"dt = {self.dt:g} exceeds the monotonicity bound 1/Lip = {self.dt_bound:g}")
        self.kernel, self._loop, self._kind, self._beta, self._p_fn = \
            _resolve_kernel(spec, kernel)
        self.dlo, self.dup = build_stencil(spec, self.x)
        self.a_int = np.ascontiguousarray(spec.a(self.x[1:-1]), dtype=np.float64)
        self._out = np.empty((2, len(self.x)))
        self.clamp_count = 0
        self.post_clip_count = 0

    def step(self, state, t: float) -> np.ndarray:
        """Advance one dt from time t; returns a new array."""
        u = np.array(state, dtype=np.float64)
        if u.shape != self.x.shape:
            raise InvalidSpecError("state does not match the grid")
        b_new = self.boundary(t + self.dt)
        bl = np.array([u[0], float(b_new[0])])
        br = np.array([u[-1], float(b_new[1])])
        args = (u, self.a_int, self._kind, self._beta, self.reaction_scale,
                self.dt, self.dlo, self.dup, bl, br, 1, 1, self._out)
        if self._p_fn is not None:
            c, p = self._loop(*args, p_fn=self._p_fn)
        else:
            c, p = self._loop(*args)
        self.clamp_count += int(c)
        self.post_clip_count += int(p)
        return u


def step(state, t: float, dt: float, config: SimulationConfig) -> np.ndarray:
    """One IMEX step under a full config (convenience; run() is the fast path)."""
    x = _grid(config.x_left, config.x_right, config.dx)
    env = config.envelopes

    def traces(tt):
        return (float(env.lower(tt, np.array([x[0]]))[0]),
                float(env.lower(tt, np.array([x[-1]]))[0]))

    stepper = Stepper(config.spec, x, dt, traces, kernel=config.kernel,
                      reaction_scale=config.reaction_scale)
    return stepper.step(state, t)


def run(config: SimulationConfig) -> FrontSolution:
    """Integrate the slab, seeded and forced by the lower envelope."""
    spec = config.spec
    if config.initial != "lower-envelope" or config.boundary != "lower-envelope":
        raise InvalidSpecError("only lower-envelope seeding and boundary traces are implemented")
    x = _grid(config.x_left, config.x_right, config.dx)
    span = float(config.t1) - float(config.t0)
    if span <= 0.0:
        raise InvalidSpecError("time window is empty")
    lip = 1.2 * abs(config.reaction_scale) * spec.lipschitz_u()
    dt_bound = math.inf if lip == 0.0 else 1.0 / lip
    if config.dt is not None:
        dt_req = float(config.dt)
        if dt_req > dt_bound * (1.0 + 1e-12):
            raise InvalidSpecError(
                f"dt = {dt_req:g} exceeds the monotonicity bound 1/Lip = {dt_bound:g}")
    else:
        dt_req = min(config.dt_factor * config.dx**2, 0.8 * dt_bound)
    n_out = int(config.n_snapshots)
    if n_out < 1:
        raise InvalidSpecError("need at least one snapshot interval")
    n_steps = max(int(math.ceil(span / dt_req)), n_out)
    n_steps = n_out * int(math.ceil(n_steps / n_out))
    dt = span / n_steps
    stride = n_steps // n_out

    tag, loop, kind, beta, p_fn = _resolve_kernel(spec, config.kernel)
    dlo, dup = build_stencil(spec, x)
    a_int = np.ascontiguousarray(spec.a(x[1:-1]), dtype=np.float64)

    env = config.envelopes
    t_steps = config.t0 + dt * np.arange(n_steps + 1)
    bl = np.ascontiguousarray(env.lower(t_steps, np.full(n_steps + 1, x[0])),
                              dtype=np.float64)
    br = np.ascontiguousarray(env.lower(t_steps, np.full(n_steps + 1, x[-1])),
                              dtype=np.float64)
    u = np.ascontiguousarray(env.lower(config.t0, x), dtype=np.float64)
    if not (float(u.min()) < 0.5 < float(u.max())):
        raise InvalidSpecError(
            "the seed trace does not transition inside the domain; move t0 or widen the domain")

    out = np.empty((n_out + 1, len(x)))
    args = (u, a_int, kind, beta, float(config.reaction_scale), dt, dlo, dup,
            bl, br, n_steps, stride, out)
    if p_fn is not None:
        clamps, post = loop(*args, p_fn=p_fn)
    else:
        clamps, post = loop(*args)

    ts = config.t0 + (dt * stride) * np.arange(n_out + 1)
    w_lo, w_up = evaluate_envelopes(env, ts, x)
    sol = FrontSolution(
        x=x, t=ts, u=out, w_lower=w_lo, w_upper=w_up,
        dx=float(config.dx), dt=float(dt), n_steps=int(n_steps), kernel=tag,
        clamp_count=int(clamps), post_clip_count=int(post),
        meta={"lipschitz": lip, "dt_bound": dt_bound, "t0": float(config.t0),
              "t1": float(config.t1), "x_left": float(config.x_left),
              "x_right": float(config.x_right), "n_snapshots": n_out,
              "reaction_scale": float(config.reaction_scale),
              "initial": config.initial, "boundary": config.boundary})
    _check_exhaustion(sol, config)
    return sol


def _check_exhaustion(sol: FrontSolution, config: SimulationConfig):
    margin = config.exhaustion_margin
    if margin is None:
        margin = 0.1 * (config.x_right - config.x_left)
    edge = config.x_right - margin
    for t, row in zip(sol.t, sol.u):
        try:
            pos = front_position(sol.x, row, 0.5)
        except FrontAbsentError:
            if float(np.min(row)) <= 0.5:
                continue  # front not yet formed; harmless
            pos = float(sol.x[-1])  # saturated past the edge
        if pos > edge:
            raise DomainExhaustedError(
                f"front at x = {pos:.6g} is within {margin:.4g} of the right edge "
                f"by t = {t:.6g}; rerun with x_right >= "
                f"{config.x_right + 0.5 * (config.x_right - config.x_left):.6g}")


# ---------------------------------------------------------------------------
# diagnostics


def front_position(x, u, level: float = 0.5) -> float:
    """Rightmost linearly interpolated crossing of the level."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(u, dtype=float) - float(level)
    if not np.all(np.isfinite(d)):
        raise FrontAbsentError("state contains non-finite values")
    cands = [float(v) for v in x[d == 0.0]]
    for i in np.nonzero(d[:-1] * d[1:] < 0.0)[0]:
        cands.append(float(x[i] + (x[i + 1] - x[i]) * d[i] / (d[i] - d[i + 1])))
    if not cands:
        raise FrontAbsentError(f"state never attains the level {level:g}")
    return max(cands)


def front_width(x, u, eps: float):
    """Diameter of {eps <= u <= 1 - eps}; returns (width, attained flag).

    The set's extremes are located by interpolating the eps and 1 - eps
    crossings, which all belong to the closed band by definition.
    """
    eps = float(eps)
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps = {eps:g} must lie in (0, 1/2)")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    pts = [float(v) for v in x[(u >= eps) & (u <= 1.0 - eps)]]
    for level in (eps, 1.0 - eps):
        d = u - level
        for i in np.nonzero(d[:-1] * d[1:] < 0.0)[0]:
            pts.append(float(x[i] + (x[i + 1] - x[i]) * d[i] / (d[i] - d[i + 1])))
    if not pts:
        return 0.0, False
    return max(pts) - min(pts), True


@dataclass(frozen=True)
class SpeedEstimate:
    speed: float       # least-squares slope over the last half of the window
    drift: float       # second-half slope minus first-half slope
    window: tuple
    positions: np.ndarray


def speed_estimate(sol: FrontSolution, level: float = 0.5) -> SpeedEstimate:
    """Front speed from X(t), with a split-window stability diagnostic."""
    t = np.asarray(sol.t, dtype=float)
    if len(t) < 10:
        raise ValueError("speed estimate needs at least 10 output times")
    X = sol.positions(level)
    half = len(t) // 2
    s1 = float(np.polyfit(t[:half], X[:half], 1)[0])
    s2 = float(np.polyfit(t[half:], X[half:], 1)[0])
    return SpeedEstimate(speed=s2, drift=s2 - s1,
                         window=(float(t[half]), float(t[-1])), positions=X)

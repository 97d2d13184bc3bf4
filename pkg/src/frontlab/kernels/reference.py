"""Pure-NumPy IMEX stepping loop (the fallback kernel).

One step from t_j to t_{j+1}:

    r = u + dt * scale * a(x) p(u)                 explicit reaction
    (I - dt D) u_new = r~                          implicit diffusion
    u <- clip(u_new, 0, 1), boundary slots overwritten from the traces

where r~ carries the new-time boundary values into the two edge equations
and D is the (possibly drift-extended) difference operator in flux form,

    (D w)_i = dlo_i (w_{i-1} - w_i) + dup_i (w_{i+1} - w_i),   dlo, dup >= 0.

Ordered states stay ordered under this step exactly as computed, not just
in exact arithmetic.  IEEE rounding is a monotone map, so a single rounding
of exactly ordered values cannot flip them; the step is arranged so that
every stored intermediate is one rounding of a quantity that is already
ordered:

* the reaction update for the closed-form families is u + c p(u) with
  c = dt scale a(x) shared by any two states being compared.  For small c
  the plain sum cannot flip adjacent floats (the rounding slop of c p(u) is
  a small multiple of c ulp(u), while the exact gap is at least
  (1 - c Lip) (v - u)); past the threshold the algebraically identical
  factored form  1 - (1 - u) max(1 - c u (1 + beta u), 0)  takes over,
  whose intermediates are all nonnegative and monotone in u.  The branch
  depends only on c, never on the state, so both runs take the same one.
* the implicit solve is a Thomas sweep whose factors depend only on the
  matrix; the off-diagonal factors are nonpositive, so each forward and
  backward update adds a nonnegative multiple of an already ordered value
  to an ordered right-hand side.
* the final clip to [0, 1] is monotone.

Solving for the new state directly, rather than for the increment past the
reaction stage, is what makes the sweep order-preserving.  The price is
that interior constants under pure diffusion are no longer reproduced bit
for bit: the sweep leaves ulp-level residue around them.  The states 0 and
1 are still exact fixed points of the reaction stage in both branches, a
zero state sweeps to exactly zero, and the clip confines the residue near
saturation to one-ulp trims.
"""

import numpy as np

from ..errors import BlowupError

KIND_KPP = 0        # p(u) = u (1 - u)
KIND_CUBIC = 1      # p(u) = u (1 - u) (1 + beta u)
KIND_CALLBACK = 2   # p(u) from a Python callable (this kernel only)


def reaction_rate(u, a_vals, kind, beta, p_fn=None):
    """f(x, u) = a(x) p(u) for the supported reaction families."""
    if kind == KIND_KPP:
        p = u * (1.0 - u)
    elif kind == KIND_CUBIC:
        p = u * (1.0 - u) * (1.0 + beta * u)
    elif kind == KIND_CALLBACK:
        p = np.asarray(p_fn(u), dtype=float)
    else:
        raise ValueError(f"unknown reaction kind id {kind}")
    return a_vals * p


def small_c_threshold(kind, beta):
    """Largest c = dt scale a for which u + c p(u) provably keeps float order.

    Worst case over a binade: the slop of the rounded increment is below
    18 c sup(p(u)/u) ulp(u) against an exact gap of (1 - c (1 + beta)) ulp(u),
    so c (1 + beta) <= 1/20 or so is safe; 1/24 leaves margin.  Above the
    threshold the factored reaction form is used instead, which trades the
    relative accuracy of the far tail (absolute error ~1e-16 there) for
    unconditional float monotonicity.
    """
    if kind == KIND_CUBIC:
        return 1.0 / (24.0 * (1.0 + beta))
    return 1.0 / 24.0


def thomas_factors(dt, dlo, dup):
    """Sweep factors of I - dt D; they depend on the matrix only.

    Returns (lo, cp, inv_den) with lo, cp <= 0 and inv_den > 0: the rows are
    strictly diagonally dominant, so no pivoting is ever needed and the
    forward/backward updates keep the signs the ordering argument relies on.
    """
    dt = float(dt)
    lo = -dt * dlo
    up = -dt * dup
    diag = 1.0 + dt * (dlo + dup)
    m = len(diag)
    inv_den = np.empty(m)
    cp = np.empty(m)
    inv_den[0] = 1.0 / diag[0]
    cp[0] = up[0] * inv_den[0]
    for i in range(1, m):
        inv_den[i] = 1.0 / (diag[i] - lo[i] * cp[i - 1])
        cp[i] = up[i] * inv_den[i]
    return lo, cp, inv_den


def _p_poly(u, kind, beta):
    p = u * (1.0 - u)
    if kind == KIND_CUBIC:
        p = p * (1.0 + beta * u)
    return p


def imex_loop(u, a_int, kind, beta, scale, dt, dlo, dup, bl, br,
              n_steps, stride, out, p_fn=None):
    """Advance u through n_steps IMEX steps, recording every stride-th state.

    u has the full grid including boundary slots; a_int, dlo, dup cover the
    interior nodes; bl, br hold the boundary traces at all step times.  out
    must have n_steps // stride + 1 rows (n_steps a multiple of stride).
    Returns (reaction clamp count, post-solve clip count); the first is zero
    whenever dt respects the monotonicity bound, the second counts the
    ulp-scale trims where the sweep grazes the ends of [0, 1].
    """
    m = a_int.shape[0]
    dts = dt * scale
    c = dts * a_int
    c_thr = small_c_threshold(kind, beta)
    small = c <= c_thr
    all_small = bool(small.all())
    any_small = bool(small.any())
    lo, cp, inv_den = thomas_factors(dt, dlo, dup)
    e_left = float(dt * dlo[0])
    e_right = float(dt * dup[m - 1])
    d = np.empty(m)
    clamps = 0
    post = 0
    out[0] = u
    for j in range(n_steps):
        ui = u[1:-1]
        if dts == 0.0:
            r = ui.copy()
        elif kind == KIND_CALLBACK:
            r = ui + dts * reaction_rate(ui, a_int, kind, beta, p_fn)
            bad = int(np.count_nonzero((r < 0.0) | (r > 1.0)))
            if bad:
                clamps += bad
                np.clip(r, 0.0, 1.0, out=r)
        elif all_small:
            r = ui + c * _p_poly(ui, kind, beta)
            bad = int(np.count_nonzero((r < 0.0) | (r > 1.0)))
            if bad:
                clamps += bad
                np.clip(r, 0.0, 1.0, out=r)
        else:
            gw = ui if kind == KIND_KPP else ui * (1.0 + beta * ui)
            fac = 1.0 - c * gw
            bad = int(np.count_nonzero(fac < 0.0))
            if bad:
                clamps += bad
                np.maximum(fac, 0.0, out=fac)
            r = 1.0 - (1.0 - ui) * fac
            if any_small:
                r = np.where(small, ui + c * _p_poly(ui, kind, beta), r)
        blv = float(bl[j + 1])
        brv = float(br[j + 1])
        r[0] = r[0] + e_left * blv
        r[m - 1] = r[m - 1] + e_right * brv
        d[0] = r[0] * inv_den[0]
        for i in range(1, m):
            d[i] = (r[i] - lo[i] * d[i - 1]) * inv_den[i]
        for i in range(m - 2, -1, -1):
            d[i] = d[i] - cp[i] * d[i + 1]
        bad = int(np.count_nonzero((d < 0.0) | (d > 1.0)))
        if bad:
            post += bad
            np.clip(d, 0.0, 1.0, out=d)
        u[1:-1] = d
        u[0] = blv
        u[-1] = brv
        if (j + 1) % stride == 0:
            if not np.all(np.isfinite(u)):
                raise BlowupError(f"non-finite state at step {j + 1}")
            out[(j + 1) // stride] = u
    return clamps, post

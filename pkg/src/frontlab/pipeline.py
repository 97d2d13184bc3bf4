"""End-to-end orchestration: validate -> spectrum -> eigenfunction ->
profile -> simulate -> verify, with artifacts written per stage.

Gate soundness: no simulation starts unless every earlier stage certificate
passed; the first failing gate raises ScenarioRejectedError with the stage
name and the numbers behind the decision, and run_pipeline converts that
into a structured entry in the run summary.

Determinism: artifacts depend only on the scenario content.  CSV floats are
written with repr (shortest round-trip form), iteration orders are fixed,
and nothing records wall-clock time, hostnames, or paths, so re-running a
config reproduces every byte.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (FrontlabError, InvalidSpecError, ScenarioRejectedError,
                     ThresholdError, WindowError)
from .linearized import EnvelopeFields
from .profiles import build_transforms, solve_sub_profile, solve_super_profile
from .reaction import alpha_for, threshold_rhs, validate_spec
from .scenario import Scenario, parse_scenario
from .simulate import (FrontSolution, SimulationConfig, front_position,
                       front_width, run, speed_estimate)
from .spectral import doubling_length, eigenfunction, sup_spectrum, superpose
from .verify import verify_run

__all__ = ["StageRecord", "Support", "RunArtifact", "build_support",
           "run_pipeline", "verify_from_dir", "sweep", "SWEEP_PARAMETERS",
           "simulation_config"]

STAGES = ("validate", "spectrum", "eigenfunction", "profile", "simulate",
          "verify")

GRAD_GATE = 1e-8  # tolerated violation of phi'^2 <= alpha a phi^2 (scaled)


@dataclass
class StageRecord:
    name: str
    passed: bool
    note: str = ""
    data: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "note": self.note, "data": self.data}


@dataclass
class Support:
    """Everything the simulation consumes, built and certified pre-run.

    Fields beyond the requested stopping stage stay None."""

    spec: object
    stages: list                           # [StageRecord, ...]
    validation: object = None
    lambda0: Optional[float] = None
    threshold: Optional[float] = None
    lam: Optional[float] = None
    alpha: Optional[float] = None
    nu: Optional[float] = None
    pairs: Optional[list] = None           # [(Eigenpair, weight), ...]
    lin: object = None                     # LinearizedSolution
    L: Optional[float] = None
    transforms: object = None              # ProfileTransforms
    env: Optional[EnvelopeFields] = None


@dataclass
class RunArtifact:
    directory: str
    config_hash: str
    summary: dict
    report: Optional[object] = None      # CertificateReport
    solution: Optional[FrontSolution] = None
    support: Optional[Support] = None
    error: Optional[dict] = None

    @property
    def all_passed(self) -> bool:
        return bool(self.summary.get("all_passed"))


# ---------------------------------------------------------------------------
# support construction (stages before the PDE run)


def _threshold_text(lambda0, nu, rhs, a_minus, a_plus) -> str:
    return (f"the construction needs a rate lambda with lambda0 < lambda <= "
            f"2 a_min - 2 sqrt(nu - 1) / (sqrt(nu) + sqrt(nu - 1)) * a_max; here "
            f"lambda0 = {lambda0:.8g}, nu = {nu:.8g}, a_min = {a_minus:.8g}, "
            f"a_max = {a_plus:.8g} put the right-hand side at {rhs:.8g}, "
            f"leaving no admissible rate")


def _select_rates(scenario: Scenario, spec, lambda0: float):
    """Apply the rate-selection rule; returns ([(lam, weight)...], cap, note)."""
    rhs = threshold_rhs(spec)        # ThresholdError escapes to the caller
    cap = min(rhs, 2.0 * spec.a_minus)
    mode = str(scenario.get("lambda", "mode")).lower()
    margin = 1e-3 * abs(lambda0)
    listed = scenario.rates_and_weights()
    if listed is not None:
        bad = [r for r, _ in listed if r > cap + 1e-12]
        if bad:
            raise ScenarioRejectedError(
                "spectrum", _threshold_text(lambda0, spec.nu, rhs,
                                            spec.a_minus, spec.a_plus)
                + f"; listed rates {bad} exceed the ceiling {cap:.8g}",
                data={"lambda0": lambda0, "nu": spec.nu, "threshold_rhs": rhs})
        return listed, cap, f"listed rates ({len(listed)})"
    if mode == "auto":
        if lambda0 + margin >= cap:
            raise ScenarioRejectedError(
                "spectrum", _threshold_text(lambda0, spec.nu, rhs,
                                            spec.a_minus, spec.a_plus),
                data={"lambda0": lambda0, "nu": spec.nu, "threshold_rhs": rhs,
                      "a_minus": spec.a_minus, "a_plus": spec.a_plus,
                      "margin": margin})
        lam = lambda0 + 0.5 * (cap - lambda0)
        return [(lam, 1.0)], cap, "auto (midpoint of the admissible interval)"
    if mode == "explicit":
        value = scenario.get("lambda", "value")
        if value is None:
            raise InvalidSpecError("[lambda] mode = explicit needs a value")
        return [(float(value), 1.0)], cap, "explicit"
    raise InvalidSpecError(f"unknown [lambda] mode {mode!r}")


def build_support(scenario: Scenario, until: Optional[str] = None) -> Support:
    """Run the pre-simulation stages, rejecting at the first failed gate.

    `until` names an earlier stopping point ('validate' ... 'profile');
    the returned Support then carries only what those stages computed."""
    stages = []

    def reject(stage, message, data=None):
        raise ScenarioRejectedError(stage, message, data=data, stages=stages)

    try:
        spec = scenario.build_spec()
    except FrontlabError as exc:
        raise ScenarioRejectedError("validate", str(exc), stages=stages) from exc

    report = validate_spec(spec)
    stages.append(StageRecord("validate", report.passed, data=report.to_dict()))
    if not report.passed:
        failed = [e for e in report.entries if not e.passed]
        reject("validate",
               "reaction data fails its admissibility checks: "
               + "; ".join(f"{e.name} ({e.note})" if e.note else e.name
                           for e in failed),
               data=report.to_dict())
    if until == "validate":
        return Support(spec=spec, stages=stages, validation=report)

    lambda0 = sup_spectrum(spec).lambda0
    try:
        rates, cap, mode_note = _select_rates(scenario, spec, lambda0)
    except ThresholdError as exc:
        stages.append(StageRecord("spectrum", False, note=str(exc),
                                  data={"lambda0": lambda0, "nu": spec.nu}))
        reject("spectrum", str(exc), data={"lambda0": lambda0, "nu": spec.nu})
    except ScenarioRejectedError as exc:
        stages.append(StageRecord("spectrum", False, note=str(exc),
                                  data=exc.data))
        raise ScenarioRejectedError(exc.stage, str(exc), data=exc.data,
                                    stages=stages) from None
    lam_top = max(r for r, _ in rates)
    try:
        alpha = alpha_for(spec, lam_top)
    except ThresholdError as exc:
        msg = (str(exc) + "; "
               + _threshold_text(lambda0, spec.nu, threshold_rhs(spec),
                                 spec.a_minus, spec.a_plus))
        stages.append(StageRecord("spectrum", False, note=msg,
                                  data={"lambda0": lambda0, "nu": spec.nu,
                                        "lambda": lam_top}))
        reject("spectrum", msg,
               data={"lambda0": lambda0, "nu": spec.nu, "lambda": lam_top,
                     "threshold_rhs": threshold_rhs(spec)})
    spectrum_data = {"lambda0": lambda0, "threshold_rhs": threshold_rhs(spec),
                     "ceiling": cap, "mode": mode_note,
                     "rates": [[r, w] for r, w in rates], "lambda": lam_top,
                     "alpha": alpha, "nu": spec.nu, "a_minus": spec.a_minus,
                     "a_plus": spec.a_plus}
    stages.append(StageRecord("spectrum", True, note=mode_note,
                              data=spectrum_data))
    if until == "spectrum":
        return Support(spec=spec, stages=stages, validation=report,
                       lambda0=lambda0, threshold=float(threshold_rhs(spec)),
                       lam=lam_top, alpha=alpha, nu=spec.nu)

    x_need = max(abs(float(scenario.get("domain", "x_left"))),
                 abs(float(scenario.get("domain", "x_right")))) + 5.0
    lam_min = min(r for r, _ in rates)
    X = max(min(30.0 / math.sqrt(lam_min - lambda0), 200.0), x_need)
    try:
        pairs = [(eigenfunction(spec, r, window=X, lambda0=lambda0), w)
                 for r, w in rates]
        for p, _ in pairs:
            if p.L is None:
                doubling_length(p)  # re-raise the window diagnosis
        L = max(p.L for p, _ in pairs)
    except FrontlabError as exc:
        stages.append(StageRecord("eigenfunction", False, note=str(exc)))
        reject("eigenfunction", str(exc))
    worst_grad = max(p.grad_margin for p, _ in pairs)
    eig_data = {"window": [-X, X], "L": L, "worst_gradient_margin": worst_grad,
                "rates": [dict(p.summary(), weight=w) for p, w in pairs]}
    if not (worst_grad <= GRAD_GATE):
        stages.append(StageRecord("eigenfunction", False, data=eig_data,
                                  note="gradient bound violated"))
        reject("eigenfunction",
               f"gradient certificate phi'^2 <= alpha a phi^2 fails by "
               f"{worst_grad:.3e} (gate {GRAD_GATE:g})", data=eig_data)
    stages.append(StageRecord("eigenfunction", True, data=eig_data))
    if until == "eigenfunction":
        return Support(spec=spec, stages=stages, validation=report,
                       lambda0=lambda0, threshold=float(threshold_rhs(spec)),
                       lam=lam_top, alpha=alpha, nu=spec.nu, pairs=pairs, L=L)
    lin = superpose(pairs)

    try:
        sup_sol = solve_super_profile(spec.g1, alpha)
        sub_sol = solve_sub_profile(spec.g0, alpha)
        transforms = build_transforms(sup_sol, sub_sol)
    except FrontlabError as exc:
        stages.append(StageRecord("profile", False, note=str(exc)))
        reject("profile", str(exc))
    cert_fail = [f"{tag}:{name}"
                 for tag, sol in (("super", sup_sol), ("sub", sub_sol))
                 for name, cert in sol.certificates.items()
                 if not cert.get("passed")]
    profile_data = transforms.summary()
    if cert_fail:
        stages.append(StageRecord("profile", False, data=profile_data,
                                  note="failed: " + ", ".join(cert_fail)))
        reject("profile", "profile certificates failed: " + ", ".join(cert_fail),
               data=profile_data)
    stages.append(StageRecord("profile", True, data=profile_data))

    env = EnvelopeFields(v=lin, lower_transform=transforms.lower,
                         upper_transform=transforms.upper)
    return Support(spec=spec, stages=stages, validation=report,
                   lambda0=lambda0, threshold=float(threshold_rhs(spec)),
                   lam=lam_top, alpha=alpha, nu=spec.nu, pairs=pairs, lin=lin,
                   L=L, transforms=transforms, env=env)


# ---------------------------------------------------------------------------
# time-window selection


def _crossing_time(lin, transforms, x_q: float) -> float:
    """Time at which the lower envelope reaches 1/2 at x_q (log v is
    strictly increasing in t, so the bracket expands until the sign flips)."""
    target = math.log(float(transforms.lower.inverse(0.5)))

    def g(t):
        return float(lin.log_v(t, np.array([x_q]))[0]) - target

    lo = hi = 0.0
    glo = g(0.0)
    step = 1.0
    for _ in range(200):
        if glo <= 0.0:
            hi = lo + step
            if g(hi) >= 0.0:
                return float(brentq(g, lo, hi, xtol=1e-10))
            lo = hi
        else:
            lo = hi - step
            if g(lo) <= 0.0:
                return float(brentq(g, lo, hi, xtol=1e-10))
            hi = lo
        step *= 1.6
    raise WindowError(f"no crossing time found for x = {x_q:g}")


def _time_window(scenario: Scenario, support: Support):
    dom = lambda k: scenario.get("domain", k)
    xl, xr = float(dom("x_left")), float(dom("x_right"))
    t0, t1 = dom("t0"), dom("t1")
    if t0 == "auto":
        t0 = _crossing_time(support.lin, support.transforms,
                            xl + float(dom("start_fraction")) * (xr - xl))
    if t1 == "auto":
        t1 = _crossing_time(support.lin, support.transforms,
                            xl + float(dom("end_fraction")) * (xr - xl))
    t0, t1 = float(t0), float(t1)
    if not t1 > t0:
        raise InvalidSpecError(f"time window [{t0:g}, {t1:g}] is empty")
    return xl, xr, t0, t1


def simulation_config(scenario: Scenario, support: Support) -> SimulationConfig:
    xl, xr, t0, t1 = _time_window(scenario, support)
    sch = lambda k: scenario.get("scheme", k)
    dt = sch("dt")
    margin = sch("exhaustion_margin")
    return SimulationConfig(
        spec=support.spec, envelopes=support.env, x_left=xl, x_right=xr,
        dx=float(scenario.get("domain", "dx")), t0=t0, t1=t1,
        n_snapshots=int(scenario.get("output", "n_snapshots")),
        dt=None if dt == "auto" else float(dt),
        dt_factor=float(sch("dt_factor")), kernel=str(sch("kernel")),
        reaction_scale=float(sch("reaction_scale")),
        exhaustion_margin=None if margin == "auto" else float(margin))


# ---------------------------------------------------------------------------
# artifact writers


def _fmt(v) -> str:
    return repr(float(v))


def _write_json(path: Path, payload: dict):
    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return [clean(v) for v in obj.tolist()]
        if isinstance(obj, (np.floating, float)):
            v = float(obj)
            return v if math.isfinite(v) else None
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.bool_,)):
            return bool(obj)
        return obj

    path.write_text(json.dumps(clean(payload), indent=2, sort_keys=True) + "\n")


def write_snapshots_csv(path: Path, sol: FrontSolution):
    lines = ["t,x,u,w_tilde,w_clamped"]
    for j in range(len(sol.t)):
        ts = _fmt(sol.t[j])
        u, wl, wu = sol.u[j], sol.w_lower[j], sol.w_upper[j]
        lines.extend(f"{ts},{_fmt(sol.x[i])},{_fmt(u[i])},{_fmt(wl[i])},{_fmt(wu[i])}"
                     for i in range(len(sol.x)))
    path.write_text("\n".join(lines) + "\n")


def read_snapshots_csv(path: Path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    t_col = data[:, 0]
    nx = int(np.searchsorted(t_col > t_col[0], True, side="left")) or len(t_col)
    if len(t_col) % nx:
        raise InvalidSpecError(f"{path} is not a rectangular snapshot table")
    nt = len(t_col) // nx
    grids = data.reshape(nt, nx, 5)
    t = grids[:, 0, 0].copy()
    x = grids[0, :, 1].copy()
    return t, x, grids[:, :, 2].copy(), grids[:, :, 3].copy(), grids[:, :, 4].copy()


def write_diagnostics_csv(path: Path, sol: FrontSolution, eps: float):
    positions = []
    for row in sol.u:
        try:
            positions.append(front_position(sol.x, row, 0.5))
        except FrontlabError:
            positions.append(math.nan)
    lines = ["t,X,width_eps,speed_window"]
    for j, t in enumerate(sol.t):
        width, _ = front_width(sol.x, sol.u[j], eps)
        window = positions[(j + 1) // 2: j + 1]
        tt = sol.t[(j + 1) // 2: j + 1]
        if len(window) >= 3 and np.all(np.isfinite(window)):
            slope = float(np.polyfit(tt, window, 1)[0])
        else:
            slope = math.nan
        lines.append(f"{_fmt(t)},{_fmt(positions[j])},{_fmt(width)},{_fmt(slope)}")
    path.write_text("\n".join(lines) + "\n")


def _write_support_artifacts(out: Path, support: Support):
    by_name = {rec.name: rec for rec in support.stages}
    for stage, fname in (("validate", "validate.json"),
                         ("spectrum", "spectrum.json"),
                         ("eigenfunction", "eigen.json"),
                         ("profile", "profile.json")):
        if stage in by_name:
            _write_json(out / fname, by_name[stage].data)

    if support.pairs is not None:
        lines = ["rate,x,phi,dphi,log_phi,psi"]
        for pair, _w in support.pairs:
            r = _fmt(pair.lam)
            lines.extend(
                f"{r},{_fmt(pair.x[i])},{_fmt(pair.phi[i])},{_fmt(pair.dphi[i])},"
                f"{_fmt(pair.log_phi[i])},{_fmt(pair.psi[i])}"
                for i in range(len(pair.x)))
        (out / "eigenfunction.csv").write_text("\n".join(lines) + "\n")

    if support.transforms is not None:
        for tag, sol in (("super", support.transforms.super_solution),
                         ("sub", support.transforms.sub_solution)):
            lines = ["s,U,V"]
            lines.extend(f"{_fmt(sol.s[i])},{_fmt(sol.U[i])},{_fmt(sol.V[i])}"
                         for i in range(len(sol.s)))
            (out / f"profile_{tag}.csv").write_text("\n".join(lines) + "\n")


def _partial_summary(scenario, stages, error=None):
    return {"config_hash": scenario.config_hash,
            "all_passed": error is None and all(r.passed for r in stages),
            "verified": any(r.name == "verify" for r in stages),
            "stages": [r.to_dict() for r in stages],
            "error": error}


# ---------------------------------------------------------------------------
# the pipeline


def run_pipeline(scenario, out_dir, stop_after: Optional[str] = None,
                 make_plots: Optional[bool] = None) -> RunArtifact:
    """Execute the staged pipeline into out_dir and return the artifact.

    scenario may be a Scenario or a path to one.  stop_after names the last
    stage to execute ('validate' ... 'verify').  Gate failures do not raise:
    they are recorded in the summary and in error.json, and the artifact's
    all_passed stays False.
    """
    if not isinstance(scenario, Scenario):
        scenario = parse_scenario(scenario)
    if stop_after is not None and stop_after not in STAGES:
        raise ValueError(f"unknown stage {stop_after!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(scenario.source_text)
    cfg_hash = scenario.config_hash

    def finish(stages, error=None, report=None, solution=None, support=None):
        summary = _partial_summary(scenario, stages, error)
        _write_json(out / "summary.json", summary)
        if error is not None:
            _write_json(out / "error.json", error)
        return RunArtifact(directory=str(out), config_hash=cfg_hash, summary=summary,
                           report=report, solution=solution, support=support,
                           error=error)

    pre_stop = stop_after if stop_after in ("validate", "spectrum",
                                            "eigenfunction", "profile") else None
    try:
        support = build_support(scenario, until=pre_stop)
    except ScenarioRejectedError as exc:
        error = {"stage": exc.stage, "type": type(exc).__name__,
                 "message": str(exc), "data": exc.data}
        return finish(exc.stages, error=error)
    _write_support_artifacts(out, support)
    stages = support.stages
    if pre_stop is not None:
        return finish(stages, support=support)

    eps = float(scenario.get("output", "eps"))
    try:
        cfg = simulation_config(scenario, support)
        sol = run(cfg)
    except FrontlabError as exc:
        stages.append(StageRecord("simulate", False, note=str(exc)))
        error = {"stage": "simulate", "type": type(exc).__name__,
                 "message": str(exc), "data": {}}
        return finish(stages, error=error, support=support)
    write_snapshots_csv(out / "snapshots.csv", sol)
    write_diagnostics_csv(out / "diagnostics.csv", sol, eps)
    sim_data = {"dx": sol.dx, "dt": sol.dt, "n_steps": sol.n_steps,
                "kernel": sol.kernel, "clamp_count": sol.clamp_count,
                "post_clip_count": sol.post_clip_count,
                "t0": float(sol.t[0]), "t1": float(sol.t[-1]),
                "nodes": len(sol.x), "snapshots": len(sol.t)}
    if len(sol.t) >= 10:
        est = speed_estimate(sol)
        sim_data["speed"] = est.speed
        sim_data["speed_drift"] = est.drift
    stages.append(StageRecord("simulate", True, data=sim_data))
    if stop_after == "simulate":
        return finish(stages, solution=sol, support=support)

    outcfg = lambda k: scenario.get("output", k)
    report = verify_run(
        sol, support.lin, support.transforms, support.L, eps=eps,
        sandwich_tol=float(outcfg("sandwich_tol")),
        monotone_tol=float(outcfg("monotone_tol")),
        ratio_tol=float(outcfg("ratio_tol")),
        limits_tol=float(outcfg("limits_tol")),
        v_threshold=float(outcfg("v_threshold")),
        boundary_nodes=int(outcfg("boundary_nodes")),
        provenance={"config_hash": cfg_hash, "lambda": support.lam,
                    "alpha": support.alpha, "L": support.L})
    (out / "certificate.txt").write_text(str(report) + "\n")
    _write_json(out / "certificate.json", report.to_dict())
    stages.append(StageRecord("verify", report.all_passed,
                              note=", ".join(f"{r.name}={r.status}"
                                             for r in report.records)))

    do_plots = outcfg("plots") if make_plots is None else make_plots
    if do_plots:
        from . import plots
        plots.render_run(out)

    return finish(stages, report=report, solution=sol, support=support)


def verify_from_dir(run_dir, out_dir=None):
    """Re-certify a finished run from its directory (config + snapshots)."""
    src = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else src
    out.mkdir(parents=True, exist_ok=True)
    scenario = parse_scenario(src / "config.ini")
    support = build_support(scenario)
    t, x, u, wl, wu = read_snapshots_csv(src / "snapshots.csv")
    meta = {}
    summary_path = src / "summary.json"
    if summary_path.exists():
        for rec in json.loads(summary_path.read_text()).get("stages", []):
            if rec.get("name") == "simulate":
                meta = rec.get("data", {})
    sol = FrontSolution(
        x=x, t=t, u=u, w_lower=wl, w_upper=wu, dx=float(x[1] - x[0]),
        dt=float(meta.get("dt", math.nan)),
        n_steps=int(meta.get("n_steps", 0)),
        kernel=str(meta.get("kernel", "unknown")),
        clamp_count=int(meta.get("clamp_count", 0)),
        post_clip_count=int(meta.get("post_clip_count", 0)), meta=dict(meta))
    outcfg = lambda k: scenario.get("output", k)
    report = verify_run(
        sol, support.lin, support.transforms, support.L,
        eps=float(outcfg("eps")),
        sandwich_tol=float(outcfg("sandwich_tol")),
        monotone_tol=float(outcfg("monotone_tol")),
        ratio_tol=float(outcfg("ratio_tol")),
        limits_tol=float(outcfg("limits_tol")),
        v_threshold=float(outcfg("v_threshold")),
        boundary_nodes=int(outcfg("boundary_nodes")),
        provenance={"config_hash": scenario.config_hash, "lambda": support.lam,
                    "alpha": support.alpha, "L": support.L})
    (out / "certificate.txt").write_text(str(report) + "\n")
    _write_json(out / "certificate.json", report.to_dict())
    return report


# ---------------------------------------------------------------------------
# sweeps


SWEEP_PARAMETERS = ("lambda", "beta", "a-amplitude", "mesh")


def _apply_parameter(scenario: Scenario, parameter: str, value: float) -> Scenario:
    if parameter == "lambda":
        return (scenario.replace("lambda", "mode", "explicit")
                .replace("lambda", "value", float(value)))
    if parameter == "beta":
        return scenario.replace("reaction", "beta", float(value))
    if parameter == "a-amplitude":
        if scenario.get("reaction", "a_kind") == "constant":
            raise InvalidSpecError(
                "a-amplitude sweep needs a non-constant rate field")
        params = dict(scenario.get("reaction", "a_params") or {})
        params["amp"] = float(value)
        return scenario.replace("reaction", "a_params", params)
    if parameter == "mesh":
        return scenario.replace("domain", "dx", float(value))
    raise InvalidSpecError(
        f"unknown sweep parameter {parameter!r}; pick one of {SWEEP_PARAMETERS}")


def _sweep_row(args):
    scenario, parameter, value, row_dir = args
    row = {"value": float(value), "speed": math.nan, "max_width": math.nan,
           "worst_sandwich": math.nan, "passed": False, "note": ""}
    try:
        variant = _apply_parameter(scenario, parameter, value)
        art = run_pipeline(variant, row_dir, make_plots=False)
        if art.error is not None:
            row["note"] = f"{art.error['stage']}: {art.error['message']}"
            return row
        for rec in art.summary["stages"]:
            if rec["name"] == "simulate":
                row["speed"] = rec["data"].get("speed", math.nan)
        row["max_width"] = art.report.record("width").details["max_width"]
        row["worst_sandwich"] = art.report.record("sandwich").worst
        row["passed"] = art.all_passed
    except Exception as exc:  # a bad row must not kill the sweep
        row["note"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(scenario, parameter: str, values, out_dir, jobs: Optional[int] = None):
    """Run one pipeline per value concurrently; returns the list of rows.

    Rows keep the order of `values`; failures are recorded per row and the
    sweep continues.  The CSV lands in out_dir/sweep.csv.
    """
    if not isinstance(scenario, Scenario):
        scenario = parse_scenario(scenario)
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidSpecError(
            f"unknown sweep parameter {parameter!r}; pick one of {SWEEP_PARAMETERS}")
    values = [float(v) for v in values]
    if not values:
        raise InvalidSpecError("sweep needs at least one value")
    _apply_parameter(scenario, parameter, values[0])  # fail fast if unusable
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(scenario, parameter, v, str(out / f"row_{i:03d}"))
             for i, v in enumerate(values)]
    if jobs == 1 or len(values) == 1:
        rows = [_sweep_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs or min(len(values), 4)) as ex:
            rows = list(ex.map(_sweep_row, tasks))
    lines = ["value,speed,max_width,worst_sandwich,passed,note"]
    for row in rows:
        note = row["note"].replace("\n", " ").replace(",", ";")
        lines.append(f"{_fmt(row['value'])},{_fmt(row['speed'])},"
                     f"{_fmt(row['max_width'])},{_fmt(row['worst_sandwich'])},"
                     f"{str(row['passed']).lower()},{note}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return rows

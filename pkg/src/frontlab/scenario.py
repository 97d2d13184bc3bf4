"""Scenario files: parsed run descriptions with a content hash.

A scenario is an INI file with sections [reaction], [lambda], [domain],
[scheme], [output].  Values are Python literals where they need structure
(dicts, tuples, lists) and plain words otherwise; 'auto' asks the pipeline
to choose.  The hash is taken over the parsed, canonicalized content, so
formatting and comments do not change it, and nothing outside the file
(paths, machine, time) enters it.
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import InvalidSpecError
from .reaction import ReactionSpec, build_reaction, coefficient_field

__all__ = ["Scenario", "parse_scenario", "scenario_from_text"]

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}

_DEFAULTS = {
    "reaction": {"kind": "kpp", "beta": 1.0, "a_kind": "constant",
                 "a_params": {}, "g0": "logistic", "g1": None, "table": None,
                 "diffusion_kind": None, "diffusion_params": {},
                 "drift_kind": None, "drift_params": {},
                 "window": (-60.0, 60.0)},
    "lambda": {"mode": "auto", "value": None, "rates": None, "weights": None},
    "domain": {"x_left": -10.0, "x_right": 40.0, "dx": 5e-3,
               "t0": "auto", "t1": "auto",
               "start_fraction": 0.25, "end_fraction": 0.75},
    "scheme": {"kernel": "auto", "dt": "auto", "dt_factor": 16.0,
               "reaction_scale": 1.0, "exhaustion_margin": "auto"},
    "output": {"n_snapshots": 40, "eps": 0.1, "v_threshold": 1e-3,
               "sandwich_tol": 1e-3, "monotone_tol": 1e-8, "ratio_tol": 5e-3,
               "limits_tol": 1e-3, "boundary_nodes": 10, "plots": True},
}


def _parse_value(raw: str):
    s = raw.strip()
    if s == "":
        return None
    try:
        return ast.literal_eval(s)
    except (ValueError, SyntaxError):
        low = s.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        return s


@dataclass
class Scenario:
    """Parsed scenario: plain nested dicts plus the verbatim source text."""

    sections: dict
    source_text: str
    path: Optional[str] = None
    _spec_cache: Optional[ReactionSpec] = field(default=None, repr=False,
                                                compare=False)

    def get(self, section: str, key: str):
        try:
            base = _DEFAULTS[section]
        except KeyError:
            raise InvalidSpecError(f"unknown scenario section [{section}]")
        if key not in base:
            raise InvalidSpecError(f"unknown scenario key [{section}] {key}")
        return self.sections.get(section, {}).get(key, base[key])

    @property
    def config_hash(self) -> str:
        merged = {}
        for section, defaults in _DEFAULTS.items():
            merged[section] = dict(defaults)
            merged[section].update(self.sections.get(section, {}))
        blob = json.dumps(merged, sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()

    def build_spec(self) -> ReactionSpec:
        if self._spec_cache is None:
            r = lambda k: self.get("reaction", k)
            diffusion = drift = None
            if r("diffusion_kind"):
                diffusion = coefficient_field(r("diffusion_kind"),
                                              r("diffusion_params") or {})
            if r("drift_kind"):
                drift = coefficient_field(r("drift_kind"), r("drift_params") or {})
            self._spec_cache = build_reaction(
                kind=r("kind"), beta=float(r("beta")), a_kind=r("a_kind"),
                a_params=r("a_params") or {}, g0_kind=r("g0"), g1_kind=r("g1"),
                table=r("table"), diffusion=diffusion, drift=drift,
                window=tuple(r("window")))
        return self._spec_cache

    def __getstate__(self):
        # the built spec holds closures; rebuildable, so never pickled
        state = self.__dict__.copy()
        state["_spec_cache"] = None
        return state

    def replace(self, section: str, key: str, value) -> "Scenario":
        """New scenario with one value overridden (the source text is
        regenerated so the copy in the run directory matches the content)."""
        self.get(section, key)  # validates the address
        sections = {s: dict(v) for s, v in self.sections.items()}
        sections.setdefault(section, {})[key] = value
        lines = []
        for s in _DEFAULTS:
            if s not in sections:
                continue
            lines.append(f"[{s}]")
            for k, v in sections[s].items():
                lines.append(f"{k} = {v!r}" if not isinstance(v, str) else f"{k} = {v}")
            lines.append("")
        return Scenario(sections=sections, source_text="\n".join(lines))

    def rates_and_weights(self):
        rates = self.get("lambda", "rates")
        weights = self.get("lambda", "weights")
        if rates is None:
            return None
        rates = [float(v) for v in rates]
        if weights is None:
            weights = [1.0] * len(rates)
        weights = [float(w) for w in weights]
        if len(weights) != len(rates) or not rates:
            raise InvalidSpecError("rates and weights must be equal-length, nonempty")
        return list(zip(rates, weights))


def scenario_from_text(text: str, path: Optional[str] = None) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive names, keep them
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidSpecError(f"scenario file does not parse: {exc}") from exc
    sections = {}
    for name in cp.sections():
        if name not in _DEFAULTS:
            raise InvalidSpecError(f"unknown scenario section [{name}]")
        known = _DEFAULTS[name]
        body = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise InvalidSpecError(f"unknown scenario key [{name}] {key}")
            body[key] = _parse_value(raw)
        sections[name] = body
    return Scenario(sections=sections, source_text=text, path=path)


def parse_scenario(path) -> Scenario:
    p = Path(path)
    return scenario_from_text(p.read_text(), path=str(p))

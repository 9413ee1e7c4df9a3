"""Scenario documents, validation, and the bundled presets.

A scenario is a JSON document selecting a pipeline (discrete, continuum,
sweep, audit), the rate laws, kernel, scaling, initial profile, grid, and
solver settings. Validation is whole-document: every problem is collected
and reported at once rather than failing on the first.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import continuum as C
from . import kernels as K
from .convergence import SweepConfig
from .rates import masel_rates, power_law_rates

__all__ = ["Scenario", "ScenarioError", "parse_scenario", "preset_catalog", "preset"]

PIPELINES = ("discrete", "continuum", "sweep", "audit")

_SECTION_KEYS = {
    None: {"name", "pipeline", "rates", "kernel", "scaling", "initial", "grid",
           "discrete", "solver", "test_functions", "boundary", "seed", "closure"},
    "rates": {"kind", "alpha", "theta", "m", "K", "beta_coeff", "tau_coeff",
              "mu_coeff", "lam", "gamma"},
    "kernel": {"kind", "atoms", "breaks", "values", "r0", "path"},
    "scaling": {"x0", "regime", "eps_list", "sigma", "n0"},
    "initial": {"profile", "center", "width", "amplitude", "left", "right",
                "height", "v0"},
    "grid": {"xmax", "cells", "leak_budget"},
    "discrete": {"n0", "N"},
    "solver": {"tol", "t_end", "output_times"},
    "test_functions": {"count", "seed"},
    "boundary": {"mode", "renewal_coeff"},
}


class ScenarioError(ValueError):
    """All validation problems of a scenario document."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass
class Scenario:
    """Validated scenario; ``raw`` keeps the canonical document for hashing."""

    name: str
    pipeline: str
    raw: dict = field(repr=False)

    def canonical_json(self):
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def content_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    # -- resolved objects -------------------------------------------------------

    def rates(self):
        r = self.raw["rates"]
        if r["kind"] == "masel":
            return masel_rates(beta_coeff=r["beta_coeff"], tau0=r["tau_coeff"],
                               mu0=r["mu_coeff"], lam=r["lam"], gamma=r["gamma"],
                               K=r.get("K"))
        return power_law_rates(alpha=r["alpha"], theta=r["theta"], m=r["m"],
                               K=r.get("K"), lam=r["lam"], gamma=r["gamma"],
                               beta_coeff=r["beta_coeff"], tau_coeff=r["tau_coeff"],
                               mu_coeff=r["mu_coeff"])

    def kernel_spec(self):
        k = self.raw["kernel"]
        if k["kind"] == "uniform":
            return "uniform"
        if k["kind"] == "measure":
            return K.SelfSimilarMeasure(
                atoms=[tuple(a) for a in k.get("atoms", [])],
                breaks=k.get("breaks", (0.0, 1.0)),
                values=k.get("values", (0.0,)),
            ).validate()
        if k["kind"] == "boundary_weighted":
            return ("boundary_weighted", float(k["r0"]))
        if k["kind"] == "file":
            return ("file", k["path"])
        raise ValueError(f"unhandled kernel kind {k['kind']!r}")

    def discrete_kernel(self, jmax, eps=None):
        spec = self.kernel_spec()
        if spec == "uniform":
            return K.uniform_kernel(jmax)
        if isinstance(spec, K.SelfSimilarMeasure):
            return K.kernel_from_measure(spec, jmax)
        if isinstance(spec, tuple) and spec[0] == "boundary_weighted":
            if eps is None:
                raise ValueError("end-weighted kernels need the scaling parameter")
            return K.boundary_weighted_kernel(eps, spec[1], K.uniform_kernel(jmax), jmax)
        if isinstance(spec, tuple) and spec[0] == "file":
            kern = K.FragmentationKernel.load(spec[1])
            if kern.jmax < jmax:
                raise ValueError(f"kernel file covers jmax={kern.jmax} < {jmax}")
            return kern
        raise AssertionError

    def initial_profile(self):
        spec = self.raw["initial"]
        if spec["profile"] == "gaussian":
            c, w, a = spec["center"], spec["width"], spec["amplitude"]

            def u0(x):
                x = np.asarray(x, dtype=float)
                return a * np.exp(-0.5 * ((x - c) / w) ** 2)
        else:  # box
            left, right, height = spec["left"], spec["right"], spec["height"]

            def u0(x):
                x = np.asarray(x, dtype=float)
                return np.where((x >= left) & (x < right), float(height), 0.0)
        return u0

    def v0(self):
        return float(self.raw["initial"]["v0"])

    def grid(self):
        g = self.raw["grid"]
        return C.SizeGrid(x0=self.raw["scaling"]["x0"], xmax=g["xmax"], cells=g["cells"])

    def output_times(self):
        s = self.raw["solver"]
        ot = s["output_times"]
        if isinstance(ot, int):
            return np.linspace(0.0, s["t_end"], ot)
        return np.asarray(ot, dtype=float)

    def boundary(self):
        b = self.raw.get("boundary", {"mode": "zero_influx"})
        if b["mode"] == "renewal":
            coeff = float(b.get("renewal_coeff", 1.0))
            return C.BoundaryModel(mode="renewal",
                                   renewal_m=lambda y: coeff * np.ones_like(np.asarray(y, float)))
        return C.BoundaryModel(mode=b["mode"]) if b["mode"] != "general" \
            else C.BoundaryModel(mode="zero_influx")

    def sweep_config(self):
        sc = self.raw["scaling"]
        rates = self.rates()
        spec = self.kernel_spec()
        ref_alt, ref_r_x = False, None
        if sc["regime"] == "boundary_breakage":
            if not (isinstance(spec, tuple) and spec[0] == "boundary_weighted"):
                raise ValueError("boundary_breakage sweeps need an end-weighted kernel")
            r0 = spec[1]
            beta_x = rates.continuum("beta")
            ref_alt, ref_r_x = True, (lambda x: r0 * beta_x(x))
        tf = self.raw["test_functions"]
        return SweepConfig(
            rates=rates, u0=self.initial_profile(), v0=self.v0(),
            eps_list=tuple(sc["eps_list"]), xmax=self.raw["grid"]["xmax"],
            x0=sc["x0"], sigma=sc.get("sigma"), regime=sc["regime"],
            kernel=spec, t_end=self.raw["solver"]["t_end"],
            nout=len(self.output_times()), tol=self.raw["solver"]["tol"],
            ref_cells=self.raw["grid"]["cells"], ref_alt=ref_alt, ref_r_x=ref_r_x,
            n_bumps=tf["count"], seed=tf["seed"],
        )


_DEFAULTS = {
    "pipeline": "discrete",
    "rates": {"kind": "power_law", "alpha": 1.0, "theta": 0.0, "m": 0.0, "K": None,
              "beta_coeff": 1.0, "tau_coeff": 0.0, "mu_coeff": 0.0,
              "lam": 0.0, "gamma": 0.0},
    "kernel": {"kind": "uniform"},
    "scaling": {"x0": 0.0, "regime": "standard",
                "eps_list": [0.5 ** k for k in range(2, 8)], "sigma": None, "n0": None},
    "initial": {"profile": "gaussian", "center": 1.5, "width": 0.35,
                "amplitude": 1.0, "v0": 1.0},
    "grid": {"xmax": 6.0, "cells": 2048, "leak_budget": 1e-6},
    "discrete": {"n0": 2, "N": 500},
    "solver": {"tol": 1e-8, "t_end": 1.0, "output_times": 11},
    "test_functions": {"count": 8, "seed": 11},
    "boundary": {"mode": "zero_influx"},
    "seed": 11,
    "closure": False,
}


def _merge_defaults(doc):
    merged = {}
    for key, default in _DEFAULTS.items():
        if isinstance(default, dict):
            merged[key] = dict(default)
            merged[key].update(doc.get(key, {}) or {})
        else:
            merged[key] = doc.get(key, default)
    if "name" in doc:
        merged["name"] = doc["name"]
    return merged


def parse_scenario(text_or_dict):
    """Parse and validate a scenario document; collects every error found."""
    errors = []
    if isinstance(text_or_dict, str):
        try:
            doc = json.loads(text_or_dict)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"not valid JSON: {exc}"]) from exc
    else:
        doc = dict(text_or_dict)
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario document must be a JSON object"])

    for key in doc:
        if key not in _SECTION_KEYS[None]:
            errors.append(f"unknown key {key!r}")
    for section, allowed in _SECTION_KEYS.items():
        if section is None or section not in doc or not isinstance(doc.get(section), dict):
            continue
        for key in doc[section]:
            if key not in allowed:
                errors.append(f"unknown key {section}.{key!r}")

    merged = _merge_defaults(doc)
    if "name" not in merged:
        errors.append("missing required key 'name'")
        merged["name"] = "unnamed"

    if merged["pipeline"] not in PIPELINES:
        errors.append(f"pipeline must be one of {PIPELINES}, got {merged['pipeline']!r}")

    r = merged["rates"]
    if r["kind"] not in ("power_law", "masel"):
        errors.append(f"rates.kind must be power_law or masel, got {r['kind']!r}")
    if not 0.0 <= r["theta"] <= 1.0:
        errors.append(f"rates.theta={r['theta']} violates theta in [0, 1]")
    if r["alpha"] < 0 or r["m"] < 0:
        errors.append("rates.alpha and rates.m must be >= 0")
    for nm in ("beta_coeff", "tau_coeff", "mu_coeff", "lam", "gamma"):
        if r[nm] < 0:
            errors.append(f"rates.{nm} must be >= 0")

    k = merged["kernel"]
    if k["kind"] not in ("uniform", "measure", "boundary_weighted", "file"):
        errors.append(f"kernel.kind {k['kind']!r} not recognized")
    if k["kind"] == "boundary_weighted" and k.get("r0") is None:
        errors.append("kernel.r0 required for boundary_weighted kernels")
    if k["kind"] == "file" and not k.get("path"):
        errors.append("kernel.path required for file kernels")

    sc = merged["scaling"]
    eps_list = sc["eps_list"]
    if not eps_list or any(e <= 0 or e > 1 for e in eps_list):
        errors.append("scaling.eps_list entries must lie in (0, 1]")
    elif any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        errors.append("scaling.eps_list must be strictly decreasing")
    if sc["x0"] < 0:
        errors.append("scaling.x0 must be >= 0")
    if sc["regime"] not in ("standard", "boundary_breakage"):
        errors.append(f"scaling.regime {sc['regime']!r} not recognized")

    ini = merged["initial"]
    if ini["profile"] not in ("gaussian", "box"):
        errors.append(f"initial.profile {ini['profile']!r} not recognized")
    if ini["v0"] < 0:
        errors.append("initial.v0 must be >= 0")

    g = merged["grid"]
    if g["xmax"] <= sc["x0"]:
        errors.append("grid.xmax must exceed scaling.x0")
    if int(g["cells"]) < 4:
        errors.append("grid.cells must be >= 4")
    if g["leak_budget"] <= 0:
        errors.append("grid.leak_budget must be > 0")

    d = merged["discrete"]
    if int(d["n0"]) < 2:
        errors.append("discrete.n0 must be >= 2")
    if int(d["N"]) <= int(d["n0"]):
        errors.append("discrete.N must exceed discrete.n0")

    s = merged["solver"]
    if s["tol"] <= 0:
        errors.append("solver.tol must be > 0")
    if s["t_end"] <= 0:
        errors.append("solver.t_end must be > 0")
    ot = s["output_times"]
    if isinstance(ot, int):
        if ot < 2:
            errors.append("solver.output_times count must be >= 2")
    else:
        arr = list(ot)
        if any(b < a for a, b in zip(arr, arr[1:])):
            errors.append("solver.output_times must be sorted ascending")
        if arr and (arr[0] < 0 or arr[-1] > s["t_end"]):
            errors.append("solver.output_times must lie in [0, t_end]")

    tf = merged["test_functions"]
    if int(tf["count"]) < 1:
        errors.append("test_functions.count must be >= 1")

    b = merged["boundary"]
    if b["mode"] not in ("zero_influx", "general", "renewal"):
        errors.append(f"boundary.mode {b['mode']!r} not recognized")

    if errors:
        raise ScenarioError(errors)
    return Scenario(name=merged["name"], pipeline=merged["pipeline"], raw=merged)


# ---------------------------------------------------------------------------
# presets


def _preset_docs():
    return {
        "null_dynamics": {
            "name": "null_dynamics",
            "pipeline": "discrete",
            "rates": {"kind": "power_law", "alpha": 0.0, "theta": 0.0, "m": 0.0,
                      "beta_coeff": 0.0, "tau_coeff": 0.0, "mu_coeff": 0.0,
                      "lam": 0.0, "gamma": 0.0},
            "discrete": {"n0": 2, "N": 200},
            "grid": {"xmax": 6.0, "cells": 256, "leak_budget": 1e-6},
        },
        "masel_constant": {
            "name": "masel_constant",
            "pipeline": "discrete",
            "closure": True,
            "rates": {"kind": "masel", "beta_coeff": 0.5, "tau_coeff": 1.0,
                      "mu_coeff": 0.2, "lam": 1.0, "gamma": 0.8},
            "initial": {"profile": "gaussian", "center": 20.0, "width": 5.0,
                        "amplitude": 1.0, "v0": 1.0},
            "discrete": {"n0": 2, "N": 500},
            "grid": {"xmax": 500.0, "cells": 256, "leak_budget": 1e-6},
        },
        "greer_limit": {
            "name": "greer_limit",
            "pipeline": "sweep",
            "rates": {"kind": "power_law", "alpha": 1.0, "theta": 0.0, "m": 0.0,
                      "beta_coeff": 1.0, "tau_coeff": 0.3, "mu_coeff": 0.1,
                      "lam": 1.0, "gamma": 1.0},
            "initial": {"profile": "gaussian", "center": 1.5, "width": 0.35,
                        "amplitude": 1.0, "v0": 1.0},
            "grid": {"xmax": 6.0, "cells": 2048, "leak_budget": 1e-6},
            "test_functions": {"count": 8, "seed": 11},
        },
        "transport_only": {
            "name": "transport_only",
            "pipeline": "sweep",
            "rates": {"kind": "power_law", "alpha": 1.0, "theta": 0.0, "m": 0.0,
                      "beta_coeff": 0.0, "tau_coeff": 1.0, "mu_coeff": 0.0,
                      "lam": 0.0, "gamma": 0.0},
            "initial": {"profile": "gaussian", "center": 1.5, "width": 0.3,
                        "amplitude": 1.0, "v0": 1.0},
            "grid": {"xmax": 5.0, "cells": 2048, "leak_budget": 1e-6},
            "test_functions": {"count": 8, "seed": 7},
        },
        "boundary_breakage": {
            "name": "boundary_breakage",
            "pipeline": "sweep",
            "rates": {"kind": "power_law", "alpha": 1.0, "theta": 0.0, "m": 0.0,
                      "beta_coeff": 1.0, "tau_coeff": 0.3, "mu_coeff": 0.0,
                      "lam": 0.0, "gamma": 0.0},
            "kernel": {"kind": "boundary_weighted", "r0": 1.0},
            "scaling": {"x0": 0.0, "regime": "boundary_breakage",
                        "eps_list": [0.5 ** k for k in range(2, 8)]},
            "initial": {"profile": "gaussian", "center": 1.6, "width": 0.3,
                        "amplitude": 1.0, "v0": 1.0},
            "grid": {"xmax": 5.0, "cells": 2048, "leak_budget": 1e-6},
            "test_functions": {"count": 8, "seed": 11},
        },
        # magnitudes: polymer sizes up to ~1000, source-to-monomer ratio
        # lam/V ~ 2400/500, polymer death <= 5e-2, breakage frequency ~ 0.1
        # per joint, strong polymerization
        "biological_defaults": {
            "name": "biological_defaults",
            "pipeline": "discrete",
            "closure": True,
            "rates": {"kind": "masel", "beta_coeff": 0.1, "tau_coeff": 20.0,
                      "mu_coeff": 0.05, "lam": 4.8, "gamma": 1.0},
            "initial": {"profile": "gaussian", "center": 100.0, "width": 20.0,
                        "amplitude": 0.001, "v0": 1.0},
            "discrete": {"n0": 2, "N": 1000},
            "grid": {"xmax": 1000.0, "cells": 256, "leak_budget": 1e-6},
            "solver": {"tol": 1e-8, "t_end": 1.0, "output_times": 11},
        },
    }


def preset_catalog():
    """Names of the bundled scenarios; each parses and runs in the test suite."""
    return sorted(_preset_docs())


def preset(name):
    docs = _preset_docs()
    if name not in docs:
        raise KeyError(f"no preset {name!r}; available: {', '.join(sorted(docs))}")
    return parse_scenario(docs[name])

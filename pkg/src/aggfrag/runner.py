"""Pipeline execution: scenario in, artifacts plus manifest out."""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._core import BACKEND
from . import continuum as C
from . import convergence as V
from . import discrete as D
from . import report
from .closures import greer_closure_rhs, integrate_closure, masel_closure_rhs
from .rates import InitialData, ScalingConfig

__all__ = ["RunManifest", "run"]


@dataclass
class RunManifest:
    """What a run produced; timings are informational, not reproducible."""

    scenario_name: str
    scenario_hash: str
    version: str
    backend: str
    seed: int
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump({
                "schema": report.SCHEMA_VERSION,
                "scenario_name": self.scenario_name,
                "scenario_hash": self.scenario_hash,
                "version": self.version,
                "backend": self.backend,
                "seed": self.seed,
                "artifacts": self.artifacts,
                "timings": self.timings,
                "flags": self.flags,
            }, fh, indent=1, sort_keys=True)
            fh.write("\n")


class SolverFailure(RuntimeError):
    """A pipeline's solver failed; carries the scenario name for context."""


def run(scenario, outdir, tol=None, threads=1, dump_state=False):
    """Execute the scenario's pipeline and write artifacts into ``outdir``."""
    os.makedirs(outdir, exist_ok=True)
    if tol is not None:
        scenario.raw["solver"]["tol"] = float(tol)
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario.content_hash(),
        version=__version__,
        backend=BACKEND,
        seed=int(scenario.raw["seed"]),
    )
    t_start = time.perf_counter()
    try:
        if scenario.pipeline == "discrete":
            _run_discrete(scenario, outdir, manifest, dump_state)
        elif scenario.pipeline == "continuum":
            _run_continuum(scenario, outdir, manifest, dump_state)
        elif scenario.pipeline == "sweep":
            _run_sweep(scenario, outdir, manifest, audit_only=False, threads=threads)
        elif scenario.pipeline == "audit":
            _run_sweep(scenario, outdir, manifest, audit_only=True, threads=threads)
        else:
            raise ValueError(f"unknown pipeline {scenario.pipeline!r}")
    except Exception as exc:
        raise SolverFailure(f"scenario {scenario.name!r}: {exc}") from exc
    manifest.timings["total"] = time.perf_counter() - t_start
    path = os.path.join(outdir, "manifest.json")
    manifest.save(path)
    return manifest


def _sigma_of(scenario):
    rates = scenario.rates()
    sc = ScalingConfig(eps=0.5, x0=scenario.raw["scaling"]["x0"],
                       sigma=scenario.raw["scaling"].get("sigma"))
    return sc.sigma_for(rates)


def _run_discrete(scenario, outdir, manifest, dump_state):
    rates = scenario.rates()
    d = scenario.raw["discrete"]
    n0, N = int(d["n0"]), int(d["N"])
    kern = scenario.discrete_kernel(N)
    profile = scenario.initial_profile()
    i = np.arange(n0, N + 1, dtype=float)
    init = InitialData(v0=scenario.v0(), u0=np.asarray(profile(i), dtype=float), n0=n0)
    t0 = time.perf_counter()
    traj = D.integrate(init, rates, kern,
                       t_end=scenario.raw["solver"]["t_end"],
                       tol=scenario.raw["solver"]["tol"],
                       output_times=scenario.output_times())
    manifest.timings["integration"] = time.perf_counter() - t0
    sigma = _sigma_of(scenario)
    path = os.path.join(outdir, "trajectory.csv")
    report.write_trajectory_csv(path, traj, sigma)
    manifest.artifacts["trajectory"] = "trajectory.csv"
    if dump_state:
        spath = os.path.join(outdir, "state.csv")
        report.write_full_state_csv(spath, traj)
        manifest.artifacts["state"] = "state.csv"
    resid, rel = D.mass_balance_residual(traj)
    manifest.flags["max_residual_rel"] = float(np.max(np.abs(rel)))

    if scenario.raw.get("closure") and rates.label == "masel":
        r = scenario.raw["rates"]
        rhs = masel_closure_rhs(r["beta_coeff"], r["tau_coeff"], r["mu_coeff"],
                                r["lam"], r["gamma"], n0)
        sizes = traj.sizes().astype(float)
        y0 = [init.v0, float(np.sum(init.u0)), float(init.u0 @ sizes)]
        oracle = integrate_closure(rhs, y0, scenario.raw["solver"]["t_end"],
                                   traj.times, tol=scenario.raw["solver"]["tol"])
        P = traj.u.sum(axis=1)
        M = traj.u @ sizes
        rows = zip(traj.times, traj.v, oracle[:, 0], P, oracle[:, 1], M, oracle[:, 2])
        cpath = os.path.join(outdir, "closure.csv")
        report.write_csv(cpath, ["t", "v", "v_closure", "P", "P_closure",
                                 "M", "M_closure"], rows)
        manifest.artifacts["closure"] = "closure.csv"
        err = max(
            float(np.max(np.abs(traj.v - oracle[:, 0]) / np.maximum(np.abs(oracle[:, 0]), 1e-12))),
            float(np.max(np.abs(P - oracle[:, 1]) / np.maximum(np.abs(oracle[:, 1]), 1e-12))),
            float(np.max(np.abs(M - oracle[:, 2]) / np.maximum(np.abs(oracle[:, 2]), 1e-12))),
        )
        manifest.flags["closure_rel_error"] = err


def _run_continuum(scenario, outdir, manifest, dump_state):
    rates = scenario.rates()
    grid = scenario.grid()
    spec = scenario.kernel_spec()
    if spec == "uniform":
        kernelC = C.UniformContinuumKernel()
    elif hasattr(spec, "first_moment"):
        kernelC = C.MeasureContinuumKernel(spec)
    else:
        raise ValueError("continuum pipeline supports uniform or measure kernels")
    boundary = scenario.boundary()
    t0 = time.perf_counter()
    traj = C.integrate_continuum(
        (scenario.v0(), scenario.initial_profile()), rates, kernelC,
        boundary=boundary, grid=grid,
        t_end=scenario.raw["solver"]["t_end"], tol=scenario.raw["solver"]["tol"],
        output_times=scenario.output_times(),
    )
    manifest.timings["integration"] = time.perf_counter() - t0
    sigma = _sigma_of(scenario)
    extra = [("influx", traj.influx_series()), ("leak", traj.leak_series())]
    path = os.path.join(outdir, "trajectory.csv")
    report.write_trajectory_csv(path, traj, sigma, extra=extra)
    manifest.artifacts["trajectory"] = "trajectory.csv"
    if dump_state:
        spath = os.path.join(outdir, "state.csv")
        report.write_full_state_csv(spath, traj)
        manifest.artifacts["state"] = "state.csv"
    _, rel = traj.residual()
    manifest.flags["max_residual_rel"] = float(np.max(np.abs(rel)))
    leak = float(traj.leak_series()[-1])
    manifest.flags["final_leak"] = leak
    manifest.flags["leak_ok"] = leak <= scenario.raw["grid"]["leak_budget"]

    if scenario.raw.get("closure") and rates.label == "power_law":
        r = scenario.raw["rates"]
        if r["theta"] == 0.0 and r["m"] == 0.0 and r["alpha"] == 1.0:
            rhs = greer_closure_rhs(r["beta_coeff"], r["tau_coeff"], r["mu_coeff"],
                                    r["lam"], r["gamma"], grid.x0)
            U0 = traj.U[0]
            h = grid.h
            y0 = [traj.V[0], float(U0.sum() * h), float(U0 @ grid.centers * h)]
            oracle = integrate_closure(rhs, y0, scenario.raw["solver"]["t_end"],
                                       traj.times, tol=scenario.raw["solver"]["tol"])
            P = traj.moment_series(0.0)
            M = traj.moment_series(1.0)
            rows = zip(traj.times, traj.V, oracle[:, 0], P, oracle[:, 1], M, oracle[:, 2])
            cpath = os.path.join(outdir, "closure.csv")
            report.write_csv(cpath, ["t", "V", "V_closure", "P", "P_closure",
                                     "M", "M_closure"], rows)
            manifest.artifacts["closure"] = "closure.csv"


def _run_sweep(scenario, outdir, manifest, audit_only=False, threads=1):
    config = scenario.sweep_config()
    t0 = time.perf_counter()
    sweep = V.run_sweep(config, threads=threads)
    manifest.timings["sweep"] = time.perf_counter() - t0

    audit_rows = V.bound_audit(sweep)
    audit_payload = [
        {"eps": r.eps, "gronwall_margin": r.gronwall_margin,
         "equicontinuity_margin": r.equicontinuity_margin, "ok": r.ok}
        for r in audit_rows
    ]
    audit_ok = all(r.ok for r in audit_rows)
    manifest.flags["audit_ok"] = audit_ok

    payload = {
        "name": scenario.name,
        "eps": list(sweep.eps_values()),
        "failures": sweep.failures,
        "audit": audit_payload,
    }

    if not audit_only:
        eps_values = sweep.eps_values()
        distances = {}
        monotone = {}
        orders = {}
        ratios = {}
        for fn in sweep.test_fns:
            series = V.weak_star_distance(sweep, fn)
            distances[fn.name] = series
            slack = np.ones(len(series) - 1)
            slack[0] = 1.05  # tolerated wiggle at the coarsest point
            monotone[fn.name] = bool(np.all(series[1:] <= slack * series[:-1]))
            ratios[fn.name] = float(series[-1] / series[0]) if series[0] > 0 else 0.0
            try:
                order, r2, used = V.fit_order(eps_values, series)
                orders[fn.name] = {"order": order, "r2": r2, "points": used}
            except ValueError:
                orders[fn.name] = None
        vgap = V.monomer_distance(sweep)
        payload.update({
            "distances": {k: list(v) for k, v in distances.items()},
            "monotone": monotone,
            "final_over_coarse": ratios,
            "orders": orders,
            "monomer_gap": list(vgap),
            "monomer_monotone": bool(np.all(vgap[1:] <= np.concatenate(([1.05], np.ones(len(vgap) - 2))) * vgap[:-1])),
        })
        csv_path = os.path.join(outdir, "distances.csv")
        report.write_sweep_csv(csv_path, eps_values, distances)
        manifest.artifacts["distances"] = "distances.csv"
        svg_path = os.path.join(outdir, "distances.svg")
        report.write_loglog_svg(svg_path, eps_values, distances, scenario.name)
        manifest.artifacts["plot"] = "distances.svg"
        manifest.flags["all_monotone"] = bool(all(monotone.values()))

    jpath = os.path.join(outdir, "report.json")
    report.sanitized_json(jpath, payload)
    manifest.artifacts["report"] = "report.json"

"""Small-parameter sweeps and weak-star convergence diagnostics.

A sweep integrates the embedded discrete system for a decreasing sequence of
scaling parameters, all sampled from one continuum initial profile, and
compares each run against a single continuum reference through a family of
smooth compactly supported test functions. The comparison metric is

    D(eps, phi) = sup over output times of |<u_eps, phi> - <U, phi>|,

plus the uniform monomer gap sup_t |v_eps - V|. The harness asserts
monotone decrease (the scaling analysis yields no rate), audits the moment
and derivative envelopes that the analysis guarantees, and can run a
mismatched reference as a negative control.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import continuum as C
from . import discrete as D
from . import kernels as K
from .rates import InitialData, ScalingConfig

__all__ = [
    "TestFunction",
    "smooth_bump",
    "mass_cutoff_function",
    "build_test_set",
    "SweepConfig",
    "EpsilonSweep",
    "ConvergenceReport",
    "HypothesisError",
    "BoundViolationError",
    "run_sweep",
    "weak_star_distance",
    "monomer_distance",
    "pairing_limit_check",
    "fit_order",
    "bound_audit",
    "small_mass_convergence",
]


class HypothesisError(ValueError):
    """A pairing family violates the moment hypothesis kappa < 1 + sigma."""


class BoundViolationError(RuntimeError):
    """A theorem-backed envelope came out negative: implementation bug."""


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    name: str
    phi: object
    dphi: object
    support: tuple


def smooth_bump(center, width):
    """C-infinity bump supported on (center-width, center+width), peak 1."""
    c, w = float(center), float(width)

    def phi(x):
        s = (np.asarray(x, dtype=float) - c) / w
        out = np.zeros_like(s)
        m = np.abs(s) < 1.0
        sm = s[m]
        out[m] = np.exp(1.0 - 1.0 / (1.0 - sm * sm))
        return out

    def dphi(x):
        s = (np.asarray(x, dtype=float) - c) / w
        out = np.zeros_like(s)
        m = np.abs(s) < 1.0
        sm = s[m]
        q = 1.0 - sm * sm
        out[m] = np.exp(1.0 - 1.0 / q) * (-2.0 * sm / (q * q)) / w
        return out

    return TestFunction(name=f"bump[{c:.3g},{w:.3g}]", phi=phi, dphi=dphi,
                        support=(c - w, c + w))


def _smooth_step(t):
    """C-infinity step: 0 for t<=0, 1 for t>=1."""
    t = np.asarray(t, dtype=float)
    f = np.zeros_like(t)
    pos = t > 0
    f[pos] = np.exp(-1.0 / t[pos])
    g = np.zeros_like(t)
    neg = t < 1
    g[neg] = np.exp(-1.0 / (1.0 - t[neg]))
    return f / (f + g)


def mass_cutoff_function(lo, hi, ramp):
    """phi(x) = x inside [lo+ramp, hi-ramp], smoothly cut to 0 outside (lo, hi)."""
    lo, hi, ramp = float(lo), float(hi), float(ramp)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return x * _smooth_step((x - lo) / ramp) * _smooth_step((hi - x) / ramp)

    def dphi(x, h=1e-6):
        x = np.asarray(x, dtype=float)
        return (phi(x + h) - phi(x - h)) / (2.0 * h)

    return TestFunction(name="mass_cutoff", phi=phi, dphi=dphi, support=(lo, hi))


def build_test_set(x0, xmax, n_bumps=8, seed=20240, margin=None):
    """Seeded family of bumps with supports inside (x0, xmax), plus a mass cutoff.

    ``margin`` keeps supports clear of both ends; sweeps pass the coarsest
    boundary-layer width n0*eps so that every run resolves every support.
    """
    rng = np.random.default_rng(seed)
    margin = (xmax - x0) * 0.04 if margin is None else margin
    lo, hi = x0 + margin, xmax - margin
    fns = []
    for _ in range(n_bumps):
        width = rng.uniform(0.06, 0.16) * (hi - lo)
        center = rng.uniform(lo + width, hi - width)
        fns.append(smooth_bump(center, width))
    fns.append(mass_cutoff_function(lo, hi, ramp=0.12 * (hi - lo)))
    return fns


# ---------------------------------------------------------------------------
# sweep configuration and execution


@dataclass
class SweepConfig:
    """Everything needed to run one sweep against one reference."""

    rates: object
    u0: object                      # continuum initial profile, callable
    v0: float = 1.0
    eps_list: tuple = tuple(0.5 ** k for k in range(2, 8))
    xmax: float = 6.0
    x0: float = 0.0
    sigma: float | None = None
    regime: str = "standard"
    kernel: object = "uniform"      # "uniform" | SelfSimilarMeasure | ("boundary_weighted", r0)
    t_end: float = 1.0
    nout: int = 11
    tol: float = 1e-8
    ref_cells: int = 2048
    ref_alt: bool = False
    ref_r_x: object = None
    n_bumps: int = 8
    seed: int = 20240

    def output_times(self):
        return np.linspace(0.0, self.t_end, self.nout)

    def scaling(self, eps):
        return ScalingConfig(eps=eps, x0=self.x0, sigma=self.sigma, regime=self.regime)

    def discrete_kernel(self, eps, N):
        if self.kernel == "uniform":
            return K.uniform_kernel(N)
        if isinstance(self.kernel, K.SelfSimilarMeasure):
            return K.kernel_from_measure(self.kernel, N)
        if isinstance(self.kernel, tuple) and self.kernel[0] == "boundary_weighted":
            r0 = float(self.kernel[1])
            return K.boundary_weighted_kernel(eps, r0, K.uniform_kernel(N), N)
        raise ValueError(f"unknown kernel spec {self.kernel!r}")

    def continuum_kernel(self):
        if isinstance(self.kernel, K.SelfSimilarMeasure):
            return C.MeasureContinuumKernel(self.kernel)
        # uniform, and the uniform-interior end-weighted family in the limit
        return C.UniformContinuumKernel()


@dataclass
class EpsilonSweep:
    config: SweepConfig
    runs: list                      # dicts: eps, n0, N, traj, init
    reference: object
    test_fns: list
    failures: list = field(default_factory=list)

    def eps_values(self):
        return np.array([r["eps"] for r in self.runs])


def sample_initial(u0, eps, n0, N):
    """Cell averages of the continuum profile: u_i = (1/eps) * integral over the cell."""
    i = np.arange(n0, N + 1)
    mid = (i + 0.5) * eps
    nodes = mid[:, None] + 0.5 * eps * K.GAUSS5_NODES[None, :]
    cell = 0.5 * eps * (u0(nodes) @ K.GAUSS5_WEIGHTS)
    return cell / eps


def run_sweep(config, threads=1):
    """Run every scaling parameter plus the continuum reference.

    Failures of individual runs are recorded and the sweep continues; the
    reference failing aborts (nothing to compare against). With ``threads``
    > 1 the per-parameter runs execute concurrently; results are reduced in
    parameter order so the output is independent of scheduling.
    """
    eps_list = tuple(config.eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    out_t = config.output_times()

    grid = C.SizeGrid(x0=config.x0, xmax=config.xmax, cells=config.ref_cells)
    kernelC = config.continuum_kernel()
    boundary = C.BoundaryModel(mode="zero_influx")
    reference = C.integrate_continuum(
        (config.v0, config.u0), config.rates, kernelC, boundary=boundary,
        grid=grid, t_end=config.t_end, tol=config.tol, output_times=out_t,
        alt=config.ref_alt, r_x=config.ref_r_x,
    )

    def one(eps):
        scaling = config.scaling(eps)
        n0 = scaling.n0
        N = int(np.ceil(config.xmax / eps))
        u0 = sample_initial(config.u0, eps, n0, N)
        init = InitialData(v0=config.v0, u0=u0, n0=n0, eps=eps)
        kern = config.discrete_kernel(eps, N)
        traj = D.integrate(init, config.rates, kern, scaling=scaling,
                           t_end=config.t_end, tol=config.tol, output_times=out_t)
        return {"eps": eps, "n0": n0, "N": N, "traj": traj, "init": init}

    runs, failures = [], []
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(eps, pool.submit(one, eps)) for eps in eps_list]
            for eps, fut in futures:
                try:
                    runs.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - isolate per-eps failures
                    failures.append({"eps": eps, "error": repr(exc)})
    else:
        for eps in eps_list:
            try:
                runs.append(one(eps))
            except Exception as exc:  # noqa: BLE001 - isolate per-eps failures
                failures.append({"eps": eps, "error": repr(exc)})
    eps_max = eps_list[0]
    layer = 1.5 * config.scaling(eps_max).n0 * eps_max
    margin = max(0.05 * (config.xmax - config.x0), layer)
    test_fns = build_test_set(config.x0, config.xmax, n_bumps=config.n_bumps,
                              seed=config.seed, margin=margin)
    return EpsilonSweep(config=config, runs=runs, reference=reference,
                        test_fns=test_fns, failures=failures)


# ---------------------------------------------------------------------------
# distances and audits


def _continuum_pairings(reference, fn):
    grid = reference.grid
    cell = grid.cell_average(fn.phi) * grid.h
    return reference.U @ cell


def weak_star_distance(sweep, fn):
    """D(eps, fn) = sup over shared output times of the pairing gap."""
    ref_series = _continuum_pairings(sweep.reference, fn)
    out = []
    for run in sweep.runs:
        traj = run["traj"]
        vals = np.array([
            D.pair_test_function(traj.state(k), fn.phi, eps=run["eps"])
            for k in range(len(traj.times))
        ])
        out.append(float(np.max(np.abs(vals - ref_series))))
    return np.array(out)

def monomer_distance(sweep):
    """sup_t |v_eps - V| per sweep entry."""
    ref_v = sweep.reference.V
    return np.array([
        float(np.max(np.abs(run["traj"].v - ref_v))) for run in sweep.runs
    ])


def pairing_limit_check(sweep, families=("beta", "tau", "mu")):
    """Weighted-pairing gaps |<z_eps u_eps, phi> - <z U, phi>| per family.

    The moment hypothesis kappa < 1 + sigma is enforced before anything is
    computed; violating it raises :class:`HypothesisError`.
    """
    config = sweep.config
    rates = config.rates
    sigma = ScalingConfig(eps=0.5, x0=config.x0, sigma=config.sigma).sigma_for(rates)
    for name in families:
        kappa = rates.exponent(name)
        if kappa >= 1.0 + sigma:
            raise HypothesisError(
                f"family {name!r}: kappa={kappa} >= 1+sigma={1 + sigma}"
            )
    ref = sweep.reference
    grid = ref.grid
    report = {}
    for name in families:
        z_x = rates.continuum(name)
        series = {}
        for fn in sweep.test_fns:
            cell = grid.cell_average(lambda x: z_x(x) * fn.phi(x)) * grid.h
            ref_series = ref.U @ cell
            gaps = []
            for run in sweep.runs:
                eps, traj = run["eps"], run["traj"]
                kappa = rates.exponent(name)
                i = traj.sizes()
                z_i = eps ** kappa * rates.coefficient(name)(i)
                vals = []
                for kk in range(len(traj.times)):
                    st = traj.state(kk)
                    st_w = D.DiscreteState(t=st.t, v=st.v, u=st.u * z_i, n0=st.n0)
                    vals.append(D.pair_test_function(st_w, fn.phi, eps=eps))
                gaps.append(float(np.max(np.abs(np.array(vals) - ref_series))))
            series[fn.name] = np.array(gaps)
        report[name] = series
    return report


def fit_order(eps_values, distances):
    """Least-squares slope of log D against log eps; returns (order, r2, used)."""
    eps_values = np.asarray(eps_values, dtype=float)
    distances = np.asarray(distances, dtype=float)
    keep = distances > 0
    if keep.sum() < 3:
        raise ValueError("need at least 3 positive distances to fit an order")
    x = np.log(eps_values[keep])
    y = np.log(distances[keep])
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2, int(keep.sum())


@dataclass
class AuditRow:
    eps: float
    gronwall_margin: float
    equicontinuity_margin: float

    @property
    def ok(self):
        return self.gronwall_margin >= 0.0 and self.equicontinuity_margin >= 0.0


def bound_audit(sweep, raise_on_violation=False):
    """Check the moment envelope and the monomer-derivative bound per run.

    Both bounds are consequences of the growth hypotheses, so a negative
    margin indicates an implementation (or scaling) bug; the mis-scaled
    regime run against the standard audit is the intended negative control.
    """
    config = sweep.config
    rates = config.rates
    sigma = ScalingConfig(eps=0.5, x0=config.x0, sigma=config.sigma).sigma_for(rates)
    T = config.t_end
    Kc = rates.K

    m0_budget = max(run["init"].m0() for run in sweep.runs)
    m1s_budget = max(run["init"].moment(1.0 + sigma) for run in sweep.runs)
    rho0 = max(run["init"].rho0() for run in sweep.runs)
    crate = max(Kc * (rho0 + rates.lam * T) * (1.0 + sigma) * 2.0 ** sigma, 2.0 * Kc)
    envelope0 = m0_budget + m1s_budget + 1.0
    cbox = max(rho0 + rates.lam * T, envelope0 * np.exp(2.0 * crate * T))

    rows = []
    for run in sweep.runs:
        traj = run["traj"]
        eps, n0 = run["eps"], run["n0"]
        t = traj.times
        m0 = traj.moment_series(0.0)
        m1s = traj.moment_series(1.0 + sigma)
        env = envelope0 * np.exp(2.0 * crate * t)
        gr_margin = float(np.min(env - (m0 + m1s)))
        m_alpha = traj.moment_series(rates.alpha)
        dv = np.abs(traj.dv_series())
        bound = rates.lam + rates.gamma * cbox + Kc * cbox * cbox \
            + 2.0 * eps * n0 * Kc * m_alpha
        eq_margin = float(np.min(bound - dv))
        rows.append(AuditRow(eps=eps, gronwall_margin=gr_margin,
                             equicontinuity_margin=eq_margin))
    if raise_on_violation:
        bad = [r for r in rows if not r.ok]
        if bad:
            raise BoundViolationError(
                "negative audit margins at eps=" + ", ".join(f"{r.eps:g}" for r in bad)
            )
    return rows


def small_mass_convergence(k0, x0, eps_list, n_probe=12):
    """Mass below the minimal size, embedded vs limit, per scaling parameter.

    Measures sup over probe sizes of |m_eps(y) - m(y)| where m_eps is the
    first moment of the embedded kernel below n0*eps and m its self-similar
    limit; only monotone decrease is asserted by callers.
    """
    out = []
    for eps in eps_list:
        n0 = max(2, int(round(x0 / eps)))
        jmax = max(int(np.ceil(4.0 * x0 / eps)), n0 + 8)
        kern = K.kernel_from_measure(k0, jmax)
        tables = K.repartition_tables(kern, eps)
        ys, m_eps = tables.small_fragment_first_moment(n0)
        keep = ys > max(2.0 * x0, 4 * eps)
        ys, m_eps = ys[keep], m_eps[keep]
        idx = np.linspace(0, len(ys) - 1, n_probe).astype(int)
        limit = np.array([0.5 * y * k0.first_moment(upto=min(x0 / y, 1.0)) for y in ys[idx]])
        out.append(float(np.max(np.abs(m_eps[idx] - limit))))
    return np.array(out)

"""Truncated discrete polymerization-fragmentation dynamics.

The state is (v, u_{n0..N}): monomer mass plus polymer counts per integer
size. The top size N keeps its loss terms but has no polymerization outflux,
so truncation quality is assessed by refining N rather than by an artificial
sink. The same right-hand side serves the raw system (all prefactors 1) and
the small-parameter embedded system via :class:`~aggfrag.rates.ScalingConfig`
prefactors.

Mass bookkeeping is integrated alongside the state: the ledger components
accumulate the monomer-death and polymer-death integrals with the same
quadrature as the solution itself, so the balance residual isolates
integrator error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import GAUSS5_NODES, GAUSS5_WEIGHTS
from .odeint import integrate_adaptive
from .rates import InitialData, ScalingConfig

__all__ = [
    "DiscreteState",
    "DiscreteTrajectory",
    "DiscreteSystem",
    "rhs_truncated",
    "rhs_rescaled",
    "integrate",
    "moments",
    "pair_test_function",
    "mass_balance_residual",
    "truncation_refinement",
]


def _seqsum(x):
    """Sequential (running) sum; trailing zeros cannot change the result."""
    x = np.asarray(x, dtype=float)
    return float(np.cumsum(x)[-1]) if x.size else 0.0


def _seqdot(a, b):
    return _seqsum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float))


@dataclass
class DiscreteState:
    """Snapshot (t, v, u_{n0..N})."""

    t: float
    v: float
    u: np.ndarray
    n0: int

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)

    @property
    def N(self):
        return self.n0 + len(self.u) - 1

    def sizes(self):
        return np.arange(self.n0, self.N + 1)


class DiscreteSystem:
    """Right-hand side of the truncated system over sizes [n0, N].

    With ``scaling=None`` this is the raw system; otherwise the embedded
    prefactors (b, d, nu, s) of the scaling regime are applied. Uniform
    kernels take an O(N) suffix-sum path; general kernels go through the
    triangular gain operator (compiled when available).
    """

    def __init__(self, rates, kernel, n0, N, scaling=None, backend=None):
        if N <= n0:
            raise ValueError(f"need N > n0, got n0={n0}, N={N}")
        if kernel.jmax < N:
            raise ValueError(f"kernel jmax={kernel.jmax} < N={N}")
        if scaling is not None and scaling.n0 != n0:
            raise ValueError(f"scaling yields n0={scaling.n0}, state has n0={n0}")
        self.rates = rates
        self.kernel = kernel
        self.n0 = int(n0)
        self.N = int(N)
        self.scaling = scaling
        self.eps = 1.0 if scaling is None else scaling.eps
        pf = {"b": 1.0, "d": 1.0, "nu": 1.0, "s": 1.0} if scaling is None \
            else scaling.prefactors(rates)
        self.b, self.d, self.nu, self.s = pf["b"], pf["d"], pf["nu"], pf["s"]

        i = np.arange(self.n0, self.N + 1, dtype=float)
        self.i = i
        self.beta_i = np.asarray(rates.beta(i), dtype=float)
        self.tau_i = np.asarray(rates.tau(i), dtype=float)
        self.mu_i = np.asarray(rates.mu(i), dtype=float)
        self.w_small = kernel.small_fragment_mass(self.n0, self.N)
        self._uniform = kernel.provenance == "uniform"
        if self._uniform:
            self._inv_jm1 = 1.0 / (i - 1.0)
            self._op = None
        else:
            self._op = kernel.gain_operator(self.n0, self.N, backend=backend)
        self.names = ["v"] + [f"u[{int(j)}]" for j in i] + ["ledger_gamma", "ledger_mu"]

    @property
    def nu_dim(self):
        return self.N - self.n0 + 1

    def pack(self, v, u, ledger=(0.0, 0.0)):
        y = np.empty(self.nu_dim + 3)
        y[0] = v
        y[1 : 1 + self.nu_dim] = u
        y[-2:] = ledger
        return y

    def unpack(self, y):
        return float(y[0]), y[1 : 1 + self.nu_dim], (float(y[-2]), float(y[-1]))

    def _gain(self, bu):
        """gain[i] = sum_{j>i} beta_j k[i,j] u_j (without the factor 2b)."""
        if self._uniform:
            q = bu * self._inv_jm1
            suffix = np.cumsum(q[::-1])[::-1]
            return suffix - q
        return self._op.apply(bu)

    def rhs(self, t, y):
        v = y[0]
        u = y[1 : 1 + self.nu_dim]
        bu = self.beta_i * u
        gain = 2.0 * self.b * self._gain(bu)
        a = self.tau_i * u
        dy = np.empty_like(y)
        du = dy[1 : 1 + self.nu_dim]
        du[:] = -(self.d * self.mu_i + self.b * self.beta_i) * u + gain
        du[1:] -= self.nu * v * (a[1:] - a[:-1])
        du[0] -= self.nu * v * a[0]
        # top size: loss terms only, polymerization feeds in but not out
        du[-1] = -(self.d * self.mu_i[-1] + self.b * self.beta_i[-1]) * u[-1] \
            + self.nu * v * a[-2]
        dy[0] = self.rates.lam - self.rates.gamma * v \
            - self.nu * self.s * v * _seqsum(a[:-1]) \
            + 2.0 * self.b * self.s * _seqdot(self.w_small, bu)
        dy[-2] = self.rates.gamma * v
        dy[-1] = self.d * self.s * _seqdot(self.i * self.mu_i, u)
        return dy

    def rhs_state(self, state):
        """Derivative (dv, du) for a bare state, ledger components dropped."""
        y = self.pack(state.v, state.u)
        dy = self.rhs(state.t, y)
        return float(dy[0]), dy[1 : 1 + self.nu_dim].copy()

    def max_dv_bound(self, v, u):
        """Theorem-backed envelope for |dv/dt| used by the equicontinuity audit."""
        K = self.rates.K
        m_alpha = moments_from(u, self.rates.alpha, self.eps, self.n0)
        m_theta = moments_from(u, self.rates.theta, self.eps, self.n0)
        return self.rates.lam + self.rates.gamma * v + K * v * m_theta \
            + 2.0 * self.eps * self.n0 * K * m_alpha


def _system_for(state, rates, kernel, scaling=None):
    return DiscreteSystem(rates, kernel, state.n0, state.N, scaling=scaling)


def rhs_truncated(state, rates, kernel):
    """Derivative (dv, du) of the raw truncated system at ``state``."""
    return _system_for(state, rates, kernel).rhs_state(state)


def rhs_rescaled(state, rates, kernel, scaling):
    """Derivative (dv, du) of the embedded system under ``scaling``."""
    if scaling.eps <= 0:
        raise ValueError("eps must be > 0")
    return _system_for(state, rates, kernel, scaling).rhs_state(state)


@dataclass
class DiscreteTrajectory:
    """Snapshots plus the integrated mass ledger."""

    times: np.ndarray
    v: np.ndarray
    u: np.ndarray           # shape (nt, N-n0+1)
    ledger_gamma: np.ndarray
    ledger_mu: np.ndarray
    n0: int
    eps: float
    s: float
    rates: object
    system: DiscreteSystem = field(repr=False, default=None)
    stats: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.n0 + self.u.shape[1] - 1

    def state(self, k):
        return DiscreteState(t=float(self.times[k]), v=float(self.v[k]),
                             u=self.u[k], n0=self.n0)

    def sizes(self):
        return np.arange(self.n0, self.N + 1)

    def mass(self):
        """v + s * sum_i i*u_i at every snapshot."""
        return self.v + self.s * self.u @ self.sizes().astype(float)

    def moment_series(self, r):
        x = self.sizes() * self.eps
        return self.eps * self.u @ (x ** r)

    def dv_series(self):
        sys = self.system
        return np.array([sys.rhs_state(self.state(k))[0] for k in range(len(self.times))])


def moments_from(u, r, eps, n0):
    i = np.arange(n0, n0 + len(u), dtype=float)
    return eps * float(np.dot((i * eps) ** r, u))


def moments(state, r, eps=1.0):
    """Embedded moment eps * sum_i (i*eps)^r * u_i."""
    if r < 0:
        raise ValueError("moment order must be >= 0")
    return moments_from(state.u, r, eps, state.n0)


def pair_test_function(state, phi, eps=1.0):
    """sum_i u_i * integral of phi over [i*eps, (i+1)*eps).

    Per-cell 5-point Gauss quadrature: exact for polynomials through
    degree 9, so the pairing equals the integral of the embedded step
    function against phi to quadrature accuracy.
    """
    i = state.sizes()
    mid = (i + 0.5) * eps
    nodes = mid[:, None] + 0.5 * eps * GAUSS5_NODES[None, :]
    cell = 0.5 * eps * (phi(nodes) @ GAUSS5_WEIGHTS)
    return float(np.dot(state.u, cell))


def integrate(initial, rates, kernel, scaling=None, t_end=1.0, tol=1e-8,
              output_times=None, backend=None):
    """Integrate the (optionally embedded) truncated system.

    ``initial`` is an :class:`~aggfrag.rates.InitialData`; snapshots are
    dense-output interpolations at ``output_times`` (default: 11 uniform
    times including 0 and t_end).
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n0 = initial.n0 if scaling is None else scaling.n0
    if scaling is not None and initial.n0 != scaling.n0:
        raise ValueError("initial data indexed from a different n0 than the scaling rule")
    system = DiscreteSystem(rates, kernel, n0, initial.N, scaling=scaling, backend=backend)
    if output_times is None:
        output_times = np.linspace(0.0, t_end, 11)
    y0 = system.pack(initial.v0, initial.u0)
    sol = integrate_adaptive(system.rhs, 0.0, y0, t_end, output_times, tol,
                             component_names=system.names)
    nu = system.nu_dim
    return DiscreteTrajectory(
        times=sol.t, v=sol.y[:, 0], u=sol.y[:, 1 : 1 + nu],
        ledger_gamma=sol.y[:, -2], ledger_mu=sol.y[:, -1],
        n0=n0, eps=system.eps, s=system.s, rates=rates, system=system,
        stats={"nsteps": sol.nsteps, "naccepted": sol.naccepted,
               "nrejected": sol.nrejected, "nfev": sol.nfev},
    )


def mass_balance_residual(traj):
    """Absolute and mass-relative balance defect at every snapshot.

    residual(t) = [v + s*sum i u](t) - [same](0) - lam*t + ledger_gamma
                  + ledger_mu; bounded by accumulated integrator error.
    """
    mass = traj.mass()
    lam = traj.rates.lam
    resid = mass - mass[0] - lam * traj.times + traj.ledger_gamma + traj.ledger_mu
    rho0 = mass[0] if mass[0] > 0 else 1.0
    return resid, resid / rho0


def truncation_refinement(initial, rates, kernel, N_list, t_end=1.0, tol=1e-8,
                          output_times=None, scaling=None):
    """Integrate at increasing truncations and difference consecutive runs.

    ``initial`` supplies data up to max(N_list); smaller truncations slice
    it, and comparisons zero-extend the smaller run. Returns a list of rows
    {"N": ..., "N_next": ..., "v_diff": sup_t |v - v'|,
    "u_diff": sup_t l1-difference}.
    """
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly increasing")
    if initial.N < N_list[-1]:
        raise ValueError("initial data shorter than the largest truncation")
    runs = []
    for N in N_list:
        init_N = InitialData(v0=initial.v0, u0=initial.u0[: N - initial.n0 + 1],
                             n0=initial.n0, eps=initial.eps)
        runs.append(integrate(init_N, rates, kernel, scaling=scaling, t_end=t_end,
                              tol=tol, output_times=output_times))
    rows = []
    for (Na, ra), (Nb, rb) in zip(zip(N_list, runs), zip(N_list[1:], runs[1:])):
        ua = np.zeros_like(rb.u)
        ua[:, : ra.u.shape[1]] = ra.u
        v_diff = float(np.max(np.abs(ra.v - rb.v)))
        u_diff = float(np.max(np.sum(np.abs(ua - rb.u), axis=1)))
        rows.append({"N": Na, "N_next": Nb, "v_diff": v_diff, "u_diff": u_diff})
    return rows

"""Continuum growth-fragmentation dynamics on a uniform size grid.

Finite-volume discretization: first-order upwind transport (growth velocity
V*tau(x) >= 0 moves mass rightward), and fragmentation handled as a
mass-conservative remap. Each breakage event of a size-y polymer
redistributes its mass according to the kernel's partial-mass function, so
the scheme's monomer-plus-polymer mass ledger telescopes to rounding error
and the monomer-preserving branch of the model is enforced by construction.

The top of the grid mirrors the discrete truncation: no outflux, with the
mass sitting in the top cells monitored as a leak metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import GAUSS5_NODES, GAUSS5_WEIGHTS, SelfSimilarMeasure
from .odeint import integrate_adaptive

__all__ = [
    "SizeGrid",
    "ContinuumState",
    "ContinuumTrajectory",
    "BoundaryModel",
    "UniformContinuumKernel",
    "MeasureContinuumKernel",
    "EndAtomSplitKernel",
    "measure_from_kernel_row",
    "ContinuumSystem",
    "DegenerateBoundaryError",
    "pde_rhs",
    "alt_limit_rhs",
    "boundary_influx",
    "integrate_continuum",
    "weak_pairing_continuum",
    "boundary_mass_split_defect",
]


class DegenerateBoundaryError(RuntimeError):
    """Ghost density requested where V*tau(x0) vanishes but influx does not."""


@dataclass(frozen=True)
class SizeGrid:
    """M uniform cells covering [x0, xmax]."""

    x0: float
    xmax: float
    cells: int

    def __post_init__(self):
        if self.xmax <= self.x0:
            raise ValueError("need xmax > x0")
        if self.cells < 4:
            raise ValueError("need at least 4 cells")
        if self.x0 < 0:
            raise ValueError("x0 must be >= 0")

    @property
    def h(self):
        return (self.xmax - self.x0) / self.cells

    @property
    def edges(self):
        return self.x0 + self.h * np.arange(self.cells + 1)

    @property
    def centers(self):
        return self.x0 + self.h * (np.arange(self.cells) + 0.5)

    def cell_average(self, fn):
        """Per-cell averages of a callable via 5-point Gauss."""
        mid = self.centers
        nodes = mid[:, None] + 0.5 * self.h * GAUSS5_NODES[None, :]
        return (fn(nodes) @ GAUSS5_WEIGHTS) * 0.5


@dataclass
class ContinuumState:
    t: float
    V: float
    U: np.ndarray
    grid: SizeGrid

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        if self.U.shape != (self.grid.cells,):
            raise ValueError("U length does not match grid")


# ---------------------------------------------------------------------------
# kernels in continuum form


class UniformContinuumKernel:
    """k(x,y) = 1/y on 0 < x < y: every fragment size equally likely."""

    uniform = True

    def mass_cdf(self, x, y):
        """Fraction of fragmented mass below x for a size-y event: (x/y)^2 clipped."""
        t = np.clip(np.asarray(x, dtype=float) / y, 0.0, 1.0)
        return t * t

    def pair_phi(self, phi, y, panels=32):
        """integral of phi(x) k(x,y) dx over [0, y]."""
        edges = np.linspace(0.0, y, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        halfw = 0.5 * (edges[1] - edges[0])
        nodes = mid[:, None] + halfw * GAUSS5_NODES[None, :]
        return float(np.sum(phi(nodes) @ GAUSS5_WEIGHTS) * halfw) / y


class MeasureContinuumKernel:
    """Self-similar kernel k(x,y) = k0(x/y)/y for a symmetric unit measure k0."""

    uniform = False

    def __init__(self, k0: SelfSimilarMeasure):
        k0.validate()
        self.k0 = k0

    def mass_cdf(self, x, y):
        t = np.clip(np.atleast_1d(np.asarray(x, dtype=float)) / y, 0.0, 1.0)
        out = np.array([self.k0.first_moment(upto=ti) for ti in t])
        return out if np.asarray(x).shape else float(out[0])

    def pair_phi(self, phi, y, panels=8):
        k0 = self.k0
        acc = 0.0
        for a, w in k0.atoms:
            acc += w * float(phi(np.array([a * y]))[0])
        for r in range(len(k0.values)):
            val = k0.values[r]
            if val == 0.0:
                continue
            lo, hi = k0.breaks[r] * y, k0.breaks[r + 1] * y
            edges = np.linspace(lo, hi, panels + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            halfw = 0.5 * (edges[1] - edges[0])
            nodes = mid[:, None] + halfw * GAUSS5_NODES[None, :]
            acc += val / y * float(np.sum(phi(nodes) @ GAUSS5_WEIGHTS) * halfw)
        return acc


class EndAtomSplitKernel:
    """Diffuse background plus paired atoms at x0 and y - x0.

    Models end-splitting at a fixed minimal size: weight p goes to a fragment
    of size exactly x0 (handled by the boundary model as influx) and p to its
    companion of size y - x0; the rest follows ``base`` self-similarly.
    """

    uniform = False

    def __init__(self, p, x0, base: SelfSimilarMeasure):
        if not 0.0 <= 2.0 * p <= 1.0:
            raise ValueError("need 0 <= 2p <= 1")
        base.validate()
        self.p = float(p)
        self.x0 = float(x0)
        self.base = base

    def mass_cdf(self, x, y):
        """Partial mass of the diffuse-plus-companion part, normalized by y.

        The x0-atom itself is excluded here (its mass is returned to the
        boundary machinery), so the total tops out at 1 - 2*p*x0/y.
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.clip(x_arr / y, 0.0, 1.0)
        out = (1.0 - 2.0 * self.p) * np.array(
            [self.base.first_moment(upto=ti) for ti in t]
        )
        out += np.where(x_arr >= y - self.x0, 2.0 * self.p * (y - self.x0) / y, 0.0)
        return out if np.asarray(x).shape else float(out[0])

    def pair_phi(self, phi, y, panels=32):
        inner = UniformContinuumKernel().pair_phi(phi, y, panels=panels) \
            if _is_lebesgue(self.base) else MeasureContinuumKernel(self.base).pair_phi(phi, y)
        return (1.0 - 2.0 * self.p) * inner \
            + self.p * float(phi(np.array([y - self.x0]))[0]) \
            + self.p * float(phi(np.array([self.x0]))[0])


def _is_lebesgue(measure):
    return not measure.atoms and np.allclose(measure.values, 1.0)


def measure_from_kernel_row(kernel, j=None):
    """Piecewise-constant measure read off a discrete kernel row.

    Rescales row j of the kernel onto [0,1]; as rows grow this recovers the
    self-similar law the kernel discretizes, so it serves as the continuum
    limit of a tabulated kernel.
    """
    j = kernel.jmax if j is None else j
    row = kernel.row(j)
    d = j - 1
    breaks = np.arange(d + 1) / d
    return SelfSimilarMeasure(breaks=breaks, values=row * d,
                              symmetric=True).validate()


# ---------------------------------------------------------------------------
# boundary


@dataclass
class BoundaryModel:
    """Influx behaviour at the minimal size x0.

    zero_influx: nothing enters at x0 (the classical closed boundary).
    general: the kernel carries an atom at x0 of weight psi_plus(y); the
        influx is imposed as a flux 2*integral(psi_plus*beta*U), which stays
        meaningful when V*tau(x0) = 0.
    renewal: the ghost density is integral(m(y) U dy)/tau(0).
    """

    mode: str = "zero_influx"
    psi_plus: object = None
    psi_minus: object = None
    renewal_m: object = None

    def __post_init__(self):
        if self.mode not in ("zero_influx", "general", "renewal"):
            raise ValueError(f"unknown boundary mode {self.mode!r}")
        if self.mode == "general" and self.psi_plus is None:
            raise ValueError("general mode needs psi_plus")
        if self.mode == "renewal" and self.renewal_m is None:
            raise ValueError("renewal mode needs the kernel weight m(y)")


def boundary_influx(state, rates, boundary):
    """Ghost density U(t, x0) implied by the boundary model.

    general mode: 2*integral(psi_plus*beta*U)/(V*tau(x0)); raises
    :class:`DegenerateBoundaryError` when the denominator vanishes against a
    nonzero influx (the solver itself only ever uses the flux form).
    """
    grid = state.grid
    if boundary.mode == "zero_influx":
        return 0.0
    xbar = grid.centers
    tau_x = rates.continuum("tau")
    if boundary.mode == "renewal":
        tau0 = float(tau_x(np.array([grid.x0]))[0])
        if tau0 <= 0.0:
            raise DegenerateBoundaryError("renewal boundary needs tau(x0) > 0")
        m = np.asarray(boundary.renewal_m(xbar), dtype=float)
        return float(np.dot(m, state.U) * grid.h / tau0)
    flux = influx_flux(state, rates, boundary)
    vt = state.V * float(tau_x(np.array([grid.x0]))[0])
    if vt <= 0.0:
        if flux == 0.0:
            return 0.0
        raise DegenerateBoundaryError(
            f"V*tau(x0) = 0 with influx flux {flux:.3e}; use the flux form"
        )
    return flux / vt


def influx_flux(state, rates, boundary):
    """Number flux entering at x0 (well-defined for every boundary mode)."""
    grid = state.grid
    if boundary.mode == "zero_influx":
        return 0.0
    xbar = grid.centers
    if boundary.mode == "renewal":
        m = np.asarray(boundary.renewal_m(xbar), dtype=float)
        return float(state.V * np.dot(m, state.U) * grid.h)
    psi = np.asarray(boundary.psi_plus(xbar), dtype=float)
    beta = np.asarray(rates.continuum("beta")(xbar), dtype=float)
    return float(2.0 * np.dot(psi * beta, state.U) * grid.h)


def boundary_mass_split_defect(kernelC, boundary, x0, ys):
    """Residual of the split mass identity
    2*int y l + 2*x0*psi(-) + 2*x0*psi(+) = x, probed at sizes ``ys``."""
    worst = 0.0
    for y in np.asarray(ys, dtype=float):
        diffuse = y * float(np.asarray(kernelC.mass_cdf(y, y)))
        pp = float(boundary.psi_plus(np.array([y]))[0]) if boundary.psi_plus else 0.0
        pm = float(boundary.psi_minus(np.array([y]))[0]) if boundary.psi_minus else 0.0
        worst = max(worst, abs(diffuse + 2.0 * x0 * (pp + pm) - y))
    return worst


# ---------------------------------------------------------------------------
# the semidiscrete system


class ContinuumSystem:
    """Finite-volume right-hand side on a :class:`SizeGrid`.

    ``alt=True`` selects the end-breakage limit: fragmentation events run at
    rate ``r_x`` and the breakage frequency acts as a leftward size drift.
    By default the monomer equation uses the mass-conserving signs; set
    ``as_printed=True`` to evaluate the alternative system with the
    polymerization and chip terms exactly as stated (ledger then only
    reported, not balanced).
    """

    def __init__(self, grid, rates, kernelC, boundary=None, alt=False,
                 r_x=None, as_printed=False):
        self.grid = grid
        self.rates = rates
        self.kernelC = kernelC
        self.boundary = boundary or BoundaryModel()
        self.alt = bool(alt)
        self.as_printed = bool(as_printed)
        M = grid.cells
        self.M = M
        xbar = grid.centers
        edges = grid.edges
        self.xbar = xbar
        self.beta_c = np.asarray(rates.continuum("beta")(xbar), dtype=float)
        self.tau_e = np.asarray(rates.continuum("tau")(edges), dtype=float)
        self.mu_c = np.asarray(rates.continuum("mu")(xbar), dtype=float)
        if alt:
            if r_x is None:
                raise ValueError("alternative regime needs the event rate r_x")
            self.r_c = np.asarray(r_x(xbar), dtype=float)
            self.beta_e = np.asarray(rates.continuum("beta")(edges), dtype=float)
            event = self.r_c
        else:
            self.r_c = None
            self.beta_e = None
            event = self.beta_c
        self._event_rate = event

        if kernelC.uniform:
            self._remap = None
            a = edges[:-1]
            self._diag = event * (xbar - a) * (xbar + a) / (xbar * xbar)
            self._suffix_w = event / xbar          # per-source weight for l > k
            self._below = event * (grid.x0 ** 2) / xbar
        else:
            W = np.zeros((M, M))
            mcdf = kernelC.mass_cdf
            for l in range(M):
                y = xbar[l]
                cuts = np.clip(edges[: l + 2], 0.0, y)
                vals = np.asarray(mcdf(cuts, y), dtype=float)
                W[: l + 1, l] = np.diff(vals)
            # G[k,l] = event_l * y_l * W[k,l] / xbar_k maps U to the number gain
            self._remap = (event * xbar)[None, :] * W / xbar[:, None]
            below = np.array(
                [float(np.asarray(mcdf(np.array([grid.x0]), y))[0]) for y in xbar]
            )
            self._below = event * xbar * below
        self.names = ["V"] + [f"U[{k}]" for k in range(M)] + ["ledger_gamma", "ledger_mu"]

    # -- helpers --------------------------------------------------------------

    def pack(self, V, U, ledger=(0.0, 0.0)):
        y = np.empty(self.M + 3)
        y[0] = V
        y[1 : 1 + self.M] = U
        y[-2:] = ledger
        return y

    def unpack(self, y):
        return float(y[0]), y[1 : 1 + self.M], (float(y[-2]), float(y[-1]))

    def state(self, t, y):
        return ContinuumState(t=t, V=float(y[0]), U=y[1 : 1 + self.M].copy(),
                              grid=self.grid)

    def _gain(self, U):
        """Fragment number deposited per cell, already divided by h*xbar."""
        if self._remap is not None:
            return self._remap @ U
        q = self._suffix_w * U
        suffix = np.cumsum(q[::-1])[::-1]
        gain = 2.0 * self.grid.h * (suffix - q)
        return gain + self._diag * U

    def influx(self, t, y):
        return influx_flux(self.state(t, y), self.rates, self.boundary)

    def max_step(self, t, y):
        V = max(float(y[0]), 0.0)
        speed = V * float(np.max(self.tau_e))
        if self.alt:
            speed = max(speed, float(np.max(self.beta_e)))
        if speed <= 0.0:
            return np.inf
        return 0.5 * self.grid.h / speed

    def rhs(self, t, y):
        V = y[0]
        U = y[1 : 1 + self.M]
        h = self.grid.h
        M = self.M
        dy = np.zeros_like(y)
        dU = dy[1 : 1 + self.M]

        # growth transport, left-biased upwind, no outflux at the top
        F = np.zeros(M + 1)
        F[1:M] = V * self.tau_e[1:M] * U[:-1]
        F[0] = self.influx(t, y)
        dU -= np.diff(F) / h
        drain = V * h * float(np.cumsum(self.tau_e[1:M] * U[:-1])[-1])

        # fragmentation: remap events mass-conservatively
        dU -= (self.mu_c + self._event_rate) * U
        dU += self._gain(U)
        frag_return = h * float(np.cumsum(self._below * U)[-1])

        chip = 0.0
        if self.alt:
            # leftward size drift from end chipping
            q = -self.beta_e[:M] * U
            dU -= np.concatenate([np.diff(q), [0.0 - q[-1]]]) / h
            chip = self.xbar[0] * self.beta_e[0] * U[0] \
                + h * float(np.cumsum(self.beta_e[1:M] * U[1:])[-1])

        if self.alt and self.as_printed:
            dy[0] = self.rates.lam - self.rates.gamma * V + drain \
                - h * float(np.cumsum(self.beta_c * U)[-1]) + frag_return
        else:
            dy[0] = self.rates.lam - self.rates.gamma * V - drain \
                + frag_return + chip
        dy[-2] = self.rates.gamma * V
        dy[-1] = h * float(np.cumsum(self.xbar * self.mu_c * U)[-1])
        return dy

    def rhs_state(self, state):
        if state.V < 0:
            raise ValueError("negative monomer mass")
        y = self.pack(state.V, state.U)
        dy = self.rhs(state.t, y)
        return float(dy[0]), dy[1 : 1 + self.M].copy()


def pde_rhs(state, rates, kernelC, boundary=None):
    """Derivative (dV, dU) of the standard system at ``state``."""
    system = ContinuumSystem(state.grid, rates, kernelC, boundary=boundary)
    return system.rhs_state(state)


def alt_limit_rhs(state, rates, kernelC, boundary=None, r_x=None, as_printed=False):
    """Derivative (dV, dU) of the end-breakage limit system at ``state``."""
    system = ContinuumSystem(state.grid, rates, kernelC, boundary=boundary,
                             alt=True, r_x=r_x, as_printed=as_printed)
    return system.rhs_state(state)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class ContinuumTrajectory:
    times: np.ndarray
    V: np.ndarray
    U: np.ndarray            # (nt, M)
    ledger_gamma: np.ndarray
    ledger_mu: np.ndarray
    grid: SizeGrid
    rates: object
    system: ContinuumSystem = field(repr=False, default=None)
    stats: dict = field(default_factory=dict)

    def state(self, k):
        return ContinuumState(t=float(self.times[k]), V=float(self.V[k]),
                              U=self.U[k], grid=self.grid)

    def mass(self):
        return self.V + self.U @ self.grid.centers * self.grid.h

    def moment_series(self, r):
        return self.grid.h * self.U @ (self.grid.centers ** r)

    def residual(self):
        mass = self.mass()
        resid = mass - mass[0] - self.rates.lam * self.times \
            + self.ledger_gamma + self.ledger_mu
        rho0 = mass[0] if mass[0] > 0 else 1.0
        return resid, resid / rho0

    def influx_series(self):
        sys = self.system
        return np.array([
            sys.influx(t, sys.pack(v, u))
            for t, v, u in zip(self.times, self.V, self.U)
        ])

    def leak_series(self, frac=0.05):
        ntop = max(1, int(round(frac * self.grid.cells)))
        xs = self.grid.centers[-ntop:]
        return self.U[:, -ntop:] @ xs * self.grid.h


def integrate_continuum(initial, rates, kernelC, boundary=None, t_end=1.0,
                        tol=1e-8, grid=None, output_times=None, alt=False,
                        r_x=None, as_printed=False):
    """Integrate the semidiscrete system with CFL-capped adaptive stepping.

    ``initial`` is (V0, U0) with U0 either an array of cell averages or a
    callable sampled by per-cell Gauss quadrature.
    """
    V0, U0 = initial
    if grid is None:
        raise ValueError("grid is required")
    if callable(U0):
        U0 = grid.cell_average(U0)
    U0 = np.asarray(U0, dtype=float)
    system = ContinuumSystem(grid, rates, kernelC, boundary=boundary, alt=alt,
                             r_x=r_x, as_printed=as_printed)
    if output_times is None:
        output_times = np.linspace(0.0, t_end, 11)
    y0 = system.pack(V0, U0)
    sol = integrate_adaptive(system.rhs, 0.0, y0, t_end, output_times, tol,
                             max_step_fn=system.max_step,
                             component_names=system.names)
    M = grid.cells
    return ContinuumTrajectory(
        times=sol.t, V=sol.y[:, 0], U=sol.y[:, 1 : 1 + M],
        ledger_gamma=sol.y[:, -2], ledger_mu=sol.y[:, -1],
        grid=grid, rates=rates, system=system,
        stats={"nsteps": sol.nsteps, "naccepted": sol.naccepted,
               "nrejected": sol.nrejected, "nfev": sol.nfev},
    )


def weak_pairing_continuum(system, state, phi, dphi):
    """Both sides of the instantaneous weak identity for a test function.

    Left: d/dt of the pairing, evaluated from the scheme derivative.
    Right: the death, breakage-loss, transport, and breakage-gain pairings
    quadratured directly from the state. Returns (lhs, rhs, defect).
    """
    if system.alt:
        raise ValueError("weak pairing is defined for the standard system")
    grid = state.grid
    h = grid.h
    xbar = grid.centers
    phi_c = np.asarray(phi(xbar), dtype=float)
    _, dU = system.rhs_state(state)
    lhs = h * float(np.dot(dU, phi_c))

    mu_term = -h * float(np.dot(system.mu_c * state.U, phi_c))
    loss_term = -h * float(np.dot(system._event_rate * state.U, phi_c))
    tau_c = np.asarray(system.rates.continuum("tau")(xbar), dtype=float)
    dphi_c = np.asarray(dphi(xbar), dtype=float)
    transport = state.V * h * float(np.dot(tau_c * state.U, dphi_c))
    gain = 0.0
    for l in range(grid.cells):
        if state.U[l] == 0.0 and system._event_rate[l] == 0.0:
            continue
        gain += system._event_rate[l] * state.U[l] \
            * system.kernelC.pair_phi(phi, xbar[l])
    gain *= 2.0 * h
    rhs = mu_term + loss_term + transport + gain
    return lhs, rhs, abs(lhs - rhs)

"""Reaction-rate laws and the small-parameter scaling.

A :class:`RateFamily` bundles the per-size coefficients (fragmentation
frequency ``beta``, polymerization ability ``tau``, polymer death ``mu``),
the scalar monomer source/death, and the exponents bounding their growth
and increments. :class:`ScalingConfig` fixes the small parameter, the
minimal stable size rule, and the exponent regime used to embed the
discrete system into size space.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "RateFamily",
    "ScalingConfig",
    "InitialData",
    "HypothesisReport",
    "power_law_rates",
    "masel_rates",
    "table_rates",
    "rescaled_coefficient",
    "verify_hypotheses",
    "embedding_weight",
]

_COEFS = ("beta", "tau", "mu")


@dataclass(frozen=True)
class RateFamily:
    """Coefficient laws with their growth/increment exponents.

    ``beta``/``tau``/``mu`` are vectorized callables over integer sizes;
    ``beta_x`` etc. are the matching continuum laws when a closed form
    exists (None for bare tables). ``K`` is the constant in the growth
    bounds coef_i <= K * i^exponent.
    """

    beta: Callable
    tau: Callable
    mu: Callable
    lam: float
    gamma: float
    alpha: float
    theta: float
    m: float
    K: float
    beta_x: Callable | None = None
    tau_x: Callable | None = None
    mu_x: Callable | None = None
    label: str = "custom"

    def exponent(self, which):
        return {"beta": self.alpha, "tau": self.theta, "mu": self.m}[which]

    def coefficient(self, which):
        return {"beta": self.beta, "tau": self.tau, "mu": self.mu}[which]

    def continuum(self, which):
        fn = {"beta": self.beta_x, "tau": self.tau_x, "mu": self.mu_x}[which]
        if fn is None:
            raise ValueError(f"no continuum law available for {which!r}")
        return fn

    def with_(self, **kw):
        return replace(self, **kw)


def _powerlaw(coeff, expo):
    def f(i):
        return coeff * np.asarray(i, dtype=float) ** expo
    return f


def power_law_rates(alpha, theta, m, K=None, lam=0.0, gamma=0.0,
                    beta_coeff=1.0, tau_coeff=1.0, mu_coeff=1.0):
    """Homogeneous laws beta_i = c*i^alpha, tau_i = c*i^theta, mu_i = c*i^m."""
    if alpha < 0 or m < 0:
        raise ValueError("alpha and m must be >= 0")
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta={theta} outside [0, 1]")
    if min(beta_coeff, tau_coeff, mu_coeff) < 0:
        raise ValueError("rate coefficients must be >= 0")
    if K is None:
        K = max(beta_coeff, tau_coeff, mu_coeff, 1.0)
    return RateFamily(
        beta=_powerlaw(beta_coeff, alpha),
        tau=_powerlaw(tau_coeff, theta),
        mu=_powerlaw(mu_coeff, m),
        lam=float(lam), gamma=float(gamma),
        alpha=float(alpha), theta=float(theta), m=float(m), K=float(K),
        beta_x=_powerlaw(beta_coeff, alpha),
        tau_x=_powerlaw(tau_coeff, theta),
        mu_x=_powerlaw(mu_coeff, m),
        label="power_law",
    )


def masel_rates(beta_coeff, tau0, mu0, lam=0.0, gamma=0.0, K=None):
    """Constant tau/mu with the shifted linear breakage law beta_i = c*(i-1).

    The shift keeps the alpha=1 growth bound with the same constant and the
    continuum limit of the embedded law is still c*x.
    """
    if min(beta_coeff, tau0, mu0) < 0:
        raise ValueError("rate coefficients must be >= 0")
    if K is None:
        K = max(beta_coeff, tau0, mu0, 1.0)

    def beta(i):
        return beta_coeff * (np.asarray(i, dtype=float) - 1.0)

    return RateFamily(
        beta=beta,
        tau=_powerlaw(tau0, 0.0),
        mu=_powerlaw(mu0, 0.0),
        lam=float(lam), gamma=float(gamma),
        alpha=1.0, theta=0.0, m=0.0, K=float(K),
        beta_x=_powerlaw(beta_coeff, 1.0),
        tau_x=_powerlaw(tau0, 0.0),
        mu_x=_powerlaw(mu0, 0.0),
        label="masel",
    )


def table_rates(beta_table, tau_table, mu_table, alpha, theta, m, K,
                lam=0.0, gamma=0.0):
    """User-supplied coefficient tables; tables are indexed by size i >= 1."""
    tables = {}
    for name, tab in (("beta", beta_table), ("tau", tau_table), ("mu", mu_table)):
        tab = np.asarray(tab, dtype=float)
        if np.any(tab < 0):
            raise ValueError(f"{name} table has negative entries")
        tables[name] = tab

    def lookup(tab):
        def f(i):
            idx = np.asarray(i, dtype=int)
            if np.any(idx < 1) or np.any(idx >= len(tab) + 1):
                raise ValueError("table lookup outside the supplied range")
            return tab[idx - 1]
        return f

    return RateFamily(
        beta=lookup(tables["beta"]), tau=lookup(tables["tau"]), mu=lookup(tables["mu"]),
        lam=float(lam), gamma=float(gamma),
        alpha=float(alpha), theta=float(theta), m=float(m), K=float(K),
        label="table",
    )


@dataclass(frozen=True)
class ScalingConfig:
    """Small parameter, minimal-size rule, and exponent regime.

    ``x0`` is the continuum minimal size targeted by eps*n0(eps); the
    default rule is n0 = max(2, round(x0/eps)), collapsing to the fixed
    value 2 when x0 = 0. ``sigma`` is the extra moment exponent; it must
    satisfy 1 + sigma > max(1, alpha, 1+m, 1+theta), and the default adds a
    0.5 margin over that threshold.
    """

    eps: float
    x0: float = 0.0
    n0_fixed: int | None = None
    sigma: float | None = None
    regime: str = "standard"

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps={self.eps} outside (0, 1]")
        if self.x0 < 0:
            raise ValueError("x0 must be >= 0")
        if self.regime not in ("standard", "boundary_breakage"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.n0_fixed is not None and self.n0_fixed < 2:
            raise ValueError("n0 must be >= 2")

    @property
    def n0(self):
        if self.n0_fixed is not None:
            return int(self.n0_fixed)
        if self.x0 == 0.0:
            return 2
        return max(2, int(round(self.x0 / self.eps)))

    def sigma_for(self, family):
        if self.sigma is not None:
            s = float(self.sigma)
        else:
            s = max(1.0, family.alpha, 1.0 + family.m, 1.0 + family.theta) - 1.0 + 0.5
        if 1.0 + s <= max(1.0, family.alpha, 1.0 + family.m, 1.0 + family.theta):
            raise ValueError(
                "sigma too small: need 1+sigma > max(1, alpha, 1+m, 1+theta)"
            )
        return s

    def prefactors(self, family):
        """Stepwise prefactors (b, d, nu, s) of the embedded system.

        Standard regime: b = eps^alpha, d = eps^m, nu = eps^(theta-1),
        s = eps^2. The end-breakage regime promotes b to eps^(alpha-1).
        """
        e = self.eps
        b = e ** (family.alpha - 1.0) if self.regime == "boundary_breakage" else e ** family.alpha
        return {"b": b, "d": e ** family.m, "nu": e ** (family.theta - 1.0), "s": e * e}

    def with_eps(self, eps):
        return replace(self, eps=eps)


@dataclass(frozen=True)
class InitialData:
    """Monomer mass and polymer counts over [n0, N] with their moment budget."""

    v0: float
    u0: np.ndarray
    n0: int
    eps: float = 1.0

    def __post_init__(self):
        if self.v0 < 0 or np.any(self.u0 < 0):
            raise ValueError("initial data must be nonnegative")

    @property
    def N(self):
        return self.n0 + len(self.u0) - 1

    def sizes(self):
        return np.arange(self.n0, self.N + 1)

    def rho0(self):
        return self.v0 + self.eps ** 2 * float(np.dot(self.sizes(), self.u0))

    def m0(self):
        return self.eps * float(np.sum(self.u0))

    def moment(self, r):
        x = self.sizes() * self.eps
        return self.eps * float(np.dot(x ** r, self.u0))


@dataclass
class HypothesisReport:
    """Smallest constants satisfying the growth and increment bounds."""

    growth_K: dict
    lipschitz_K: dict
    minimal_K: float
    configured_K: float

    @property
    def passed(self):
        return self.minimal_K <= self.configured_K


def verify_hypotheses(family, imax, i_min=1):
    """Scan i <= imax for the smallest K with coef_i <= K i^kappa and
    |coef_{i+1}-coef_i| <= K i^(kappa-1)."""
    if imax < i_min + 1:
        raise ValueError("imax too small to scan")
    i = np.arange(i_min, imax + 1, dtype=float)
    growth = {}
    lips = {}
    for name in _COEFS:
        kappa = family.exponent(name)
        c = family.coefficient(name)(i)
        if np.any(c < 0):
            raise ValueError(f"{name} takes negative values")
        growth[name] = float(np.max(c / i ** kappa))
        incr = np.abs(np.diff(c))
        lips[name] = float(np.max(incr / i[:-1] ** (kappa - 1.0))) if len(incr) else 0.0
    minimal = max(max(growth.values()), max(lips.values()))
    return HypothesisReport(
        growth_K=growth, lipschitz_K=lips,
        minimal_K=minimal, configured_K=family.K,
    )


def rescaled_coefficient(family, which, eps, x, n0=None):
    """Stepwise embedded coefficient eps^kappa * coef_i on [i*eps, (i+1)*eps).

    With ``n0`` given the law is restricted to the polymer range and returns
    0 below n0*eps.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("sizes must be >= 0")
    kappa = family.exponent(which)
    i = np.floor(x / eps).astype(int)
    lo = 1 if n0 is None else int(n0)
    out = np.zeros(x.shape, dtype=float)
    live = i >= lo
    if np.any(live):
        out[live] = eps ** kappa * family.coefficient(which)(i[live])
    return out if out.shape else float(out)


def embedding_weight(eps, x):
    """Cell-left-endpoint weight e(x) = eps * floor(x/eps); |e(x) - x| <= eps."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("sizes must be >= 0")
    out = eps * np.floor(x / eps)
    return out if out.shape else float(out)

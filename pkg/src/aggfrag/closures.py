"""Low-dimensional moment closures used as independent cross-checks.

For constant polymerization/death rates, linear breakage frequency, and the
uniform kernel, the full hierarchy closes over (monomer mass, polymer count,
polymer mass). These three-variable systems are integrated separately from
the size-resolved solvers and serve as oracles for them.
"""
from __future__ import annotations

import numpy as np

from .odeint import integrate_adaptive

__all__ = ["masel_closure_rhs", "greer_closure_rhs", "integrate_closure"]


def masel_closure_rhs(beta_coeff, tau0, mu0, lam, gamma, n0):
    """Closure of the discrete system with beta_j = c*(j-1), uniform kernel.

    State y = (v, P, M) with P the polymer count and M the polymer mass;
    splitting below the minimal size n0 recycles n0*(n0-1)/2 * 2 monomers
    per unit breakage frequency.
    """
    c = float(beta_coeff)
    w = float(n0 * (n0 - 1))

    def rhs(t, y):
        v, P, M = y
        return np.array([
            lam - gamma * v - tau0 * v * P + c * w * P,
            c * M - (mu0 + c * (2 * n0 - 1)) * P,
            tau0 * v * P - mu0 * M - c * w * P,
        ])

    return rhs


def greer_closure_rhs(beta_coeff, tau0, mu0, lam, gamma, x0):
    """Closure of the continuum system with beta(x) = b*x, uniform kernel,
    constant tau and mu, and zero influx at x0."""
    b = float(beta_coeff)

    def rhs(t, y):
        V, P, M = y
        return np.array([
            lam - gamma * V - tau0 * V * P + b * x0 * x0 * P,
            b * M - (mu0 + 2.0 * b * x0) * P,
            tau0 * V * P - mu0 * M - b * x0 * x0 * P,
        ])

    return rhs


def integrate_closure(rhs, y0, t_end, output_times, tol=1e-8):
    sol = integrate_adaptive(rhs, 0.0, np.asarray(y0, dtype=float), t_end,
                             output_times, tol,
                             component_names=["v", "P", "M"])
    return sol.y

"""Adaptive embedded Runge-Kutta integration with positivity rejection.

A Dormand-Prince 5(4) pair with PI step-size control and 4th-order dense
output. Steps whose error passes but that produce a negative component are
rejected and retried with half the step, so every accepted state is
componentwise nonnegative; persistent rejection raises
:class:`StiffnessError` naming the time and the dominant component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StiffnessError", "Solution", "integrate_adaptive"]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense-output weights
_D = np.array([
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ALPHA = 0.7 / 5.0   # PI controller exponents
_BETA = 0.4 / 5.0
_MAX_NEG_RETRIES = 60


class StiffnessError(RuntimeError):
    """Step size collapsed; carries the failure time and dominant component."""

    def __init__(self, t, component, detail=""):
        self.t = t
        self.component = component
        super().__init__(
            f"step size underflow at t={t:.6g} (dominant component: {component})"
            + (f"; {detail}" if detail else "")
        )


@dataclass
class Solution:
    """Trajectory snapshots at the requested output times plus step statistics."""

    t: np.ndarray
    y: np.ndarray
    nsteps: int
    naccepted: int
    nrejected: int
    nfev: int


def _error_norm(err, y0, y1, tol):
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def _initial_step(f, t0, y0, f0, t_end, tol):
    scale = tol + tol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = float(np.max(np.abs(f1 - f0) / scale)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def _dense(rcont, theta):
    r1, r2, r3, r4, r5 = rcont
    t1 = 1.0 - theta
    return r1 + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)))


def integrate_adaptive(f, t0, y0, t_end, output_times, tol, *,
                       enforce_nonneg=True, max_step_fn=None, max_steps=2_000_000,
                       component_names=None):
    """Integrate y' = f(t, y) from t0 to t_end with local error control `tol`.

    Snapshots are taken at ``output_times`` (all inside [t0, t_end]) via the
    pair's dense output. ``max_step_fn(t, y)`` may cap the next step (used
    for transport CFL limits). Results are deterministic: the step sequence
    depends only on (f, y0, tol, max_step_fn).
    """
    y0 = np.asarray(y0, dtype=float)
    output_times = np.asarray(output_times, dtype=float)
    if output_times.ndim != 1 or np.any(np.diff(output_times) < 0):
        raise ValueError("output_times must be sorted ascending")
    if len(output_times) and (output_times[0] < t0 - 1e-12 or output_times[-1] > t_end + 1e-12):
        raise ValueError("output_times must lie in [t0, t_end]")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")

    ys = np.empty((len(output_times), len(y0)))
    iout = 0
    while iout < len(output_times) and output_times[iout] <= t0:
        ys[iout] = y0
        iout += 1

    t = t0
    y = y0.copy()
    k = np.empty((7, len(y0)))
    k[0] = f(t, y)
    nfev = 1
    h = _initial_step(f, t, y, k[0], t_end, tol)
    nfev += 1
    if max_step_fn is not None:
        h = min(h, max_step_fn(t, y))
    errold = 1e-4
    nsteps = naccepted = nrejected = 0
    neg_retries = 0

    while t < t_end:
        if nsteps >= max_steps:
            raise StiffnessError(t, _dominant(y, component_names), "step budget exhausted")
        h = min(h, t_end - t)
        if max_step_fn is not None:
            h = min(h, max_step_fn(t, y))
        if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StiffnessError(t, _dominant(y, component_names))
        nsteps += 1

        for s in range(1, 7):
            k[s] = f(t + _C[s] * h, y + h * (_A[s] @ k[:s]))
        nfev += 6
        ynew = y + h * (_A[6] @ k[:6])
        # FSAL: stage 7 is f at (t+h, ynew)
        err_vec = h * (_E @ k)
        err = _error_norm(err_vec, y, ynew, tol)

        if err > 1.0:
            nrejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-_ALPHA))
            continue

        if enforce_nonneg and float(ynew.min()) < 0.0:
            nrejected += 1
            neg_retries += 1
            if neg_retries > _MAX_NEG_RETRIES:
                raise StiffnessError(
                    t, _dominant(-ynew, component_names),
                    "negativity rejection did not converge",
                )
            h *= 0.5
            continue
        neg_retries = 0

        # dense output coefficients for [t, t+h]
        ydiff = ynew - y
        bspl = h * k[0] - ydiff
        rcont = (
            y.copy(),
            ydiff,
            bspl,
            ydiff - h * k[6] - bspl,
            h * (_D @ k),
        )
        while iout < len(output_times) and output_times[iout] <= t + h + 1e-14 * max(abs(t + h), 1.0):
            theta = (output_times[iout] - t) / h
            ys[iout] = ynew if theta >= 1.0 else _dense(rcont, theta)
            iout += 1

        t += h
        y = ynew
        k[0] = k[6]  # FSAL reuse
        naccepted += 1
        err_ctrl = max(err, 1e-10)  # err = 0 on exactly-resolved dynamics
        fac = _SAFETY * err_ctrl ** (-_ALPHA) * errold ** _BETA
        h *= min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
        errold = max(err, 1e-4)

    while iout < len(output_times):
        ys[iout] = y
        iout += 1
    return Solution(t=output_times.copy(), y=ys, nsteps=nsteps,
                    naccepted=naccepted, nrejected=nrejected, nfev=nfev)


def _dominant(y, names):
    idx = int(np.argmax(np.abs(y)))
    if names is not None and idx < len(names):
        return names[idx]
    return f"index {idx}"

"""Backend selection for the hot fragmentation-gain kernel.

The compiled extension (Cython) walks the packed triangular kernel rows
directly; the pure-Python fallback expands the rows into a dense matrix once
and relies on BLAS. Either backend can be forced with
``AGGFRAG_BACKEND=cython|python``; by default the extension is used when the
build produced it.
"""
import os

import numpy as np

_requested = os.environ.get("AGGFRAG_BACKEND", "").strip().lower()

_cy = None
if _requested not in ("python", "py"):
    try:
        from . import _tri_cy as _cy  # type: ignore[attr-defined]
    except ImportError:
        if _requested in ("cython", "cy"):
            raise ImportError(
                "AGGFRAG_BACKEND=cython requested but the compiled extension "
                "aggfrag._core._tri_cy is not available"
            )

BACKEND = "cython" if _cy is not None else "python"


def available_backends():
    return ("cython", "python") if _cy is not None else ("python",)


class TriGainOperator:
    """Applies w -> gain with gain[i-n0] = sum_{j>i} w[j-n0] * k[i,j].

    Built once per (kernel, n0, N) and reused for every right-hand-side
    evaluation; construction cost is O(N^2), application cost O(N^2) with a
    small constant on either backend.
    """

    def __init__(self, data, start, n0, N, backend=None):
        if N < n0:
            raise ValueError(f"need N >= n0, got n0={n0}, N={N}")
        if len(start) <= N:
            raise ValueError(f"packed kernel covers jmax={len(start) - 1} < N={N}")
        self.n0 = int(n0)
        self.N = int(N)
        backend = backend or BACKEND
        if backend not in ("cython", "python"):
            raise ValueError(f"unknown backend {backend!r}")
        if backend == "cython" and _cy is None:
            raise ValueError("cython backend not available in this build")
        self.backend = backend
        if backend == "cython":
            self._data = np.ascontiguousarray(data, dtype=np.float64)
            self._start = np.ascontiguousarray(start, dtype=np.int64)
        else:
            nu = self.N - self.n0 + 1
            mat = np.zeros((nu, nu))
            for j in range(self.n0 + 1, self.N + 1):
                base = start[j] - 1
                mat[: j - self.n0, j - self.n0] = data[base + self.n0 : base + j]
            self._mat = mat

    def apply(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.N - self.n0 + 1,):
            raise ValueError("weight vector has wrong length")
        if self.backend == "cython":
            out = np.zeros_like(w)
            _cy.packed_tri_gain(
                self._data, self._start, self.n0, self.N,
                np.ascontiguousarray(w), out,
            )
            return out
        return self._mat @ w

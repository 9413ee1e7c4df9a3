"""Fragmentation kernels for polymer breakage.

A kernel assigns to every polymer size j a probability law k[i,j] over the
fragment sizes i in {1..j-1}. Admissible kernels are symmetric (a split into
(i, j-i) is one event seen from both sides), row-normalized, and therefore
conserve mass: 2*sum_i i*k[i,j] = j.

Kernels are built three ways: the uniform law, discretization of a symmetric
self-similar probability measure on [0,1] (half-weights for atoms landing on
cell boundaries, endpoint atoms folded into the extreme fragments), and an
end-weighted family where chain ends break preferentially.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import TriGainOperator

__all__ = [
    "SelfSimilarMeasure",
    "FragmentationKernel",
    "AxiomReport",
    "RepartitionTables",
    "uniform_kernel",
    "kernel_from_measure",
    "boundary_weighted_kernel",
    "check_axioms",
    "compactness_modulus",
    "strengthened_modulus",
    "repartition_tables",
]

# 5-point Gauss-Legendre rule on [-1, 1]; exact through degree 9.
GAUSS5_NODES = np.array([
    -0.9061798459386639927976269,
    -0.5384693101056830910363144,
    0.0,
    0.5384693101056830910363144,
    0.9061798459386639927976269,
])
GAUSS5_WEIGHTS = np.array([
    0.2369268850561890875142640,
    0.4786286704993664680412915,
    0.5688888888888888888888889,
    0.4786286704993664680412915,
    0.2369268850561890875142640,
])

MASS_TOL = 1e-12
SYM_TOL = 1e-12
_GRID_SNAP = 1e-12  # atoms within this distance of a cell boundary split half/half


class SelfSimilarMeasure:
    """Symmetric probability measure on [0,1]: atoms plus a piecewise-constant density.

    ``atoms`` is a list of (location, weight) pairs; ``breaks``/``values``
    describe a nonnegative density that equals values[r] on
    (breaks[r], breaks[r+1]). Total mass must be 1 and, when ``symmetric``
    is set, the measure must be invariant under x -> 1-x.
    """

    def __init__(self, atoms=(), breaks=(0.0, 1.0), values=(0.0,), symmetric=True):
        self.atoms = [(float(a), float(w)) for a, w in atoms]
        self.breaks = np.asarray(breaks, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.symmetric = bool(symmetric)
        if self.breaks.ndim != 1 or len(self.breaks) != len(self.values) + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("density breakpoints must be strictly increasing")
        if self.breaks[0] != 0.0 or self.breaks[-1] != 1.0:
            raise ValueError("density must be described on [0, 1]")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")
        if any(w < 0 for _, w in self.atoms):
            raise ValueError("atom weights must be nonnegative")
        if any(not 0.0 <= a <= 1.0 for a, _ in self.atoms):
            raise ValueError("atoms must lie in [0, 1]")
        # cumulative density integral at the breakpoints; the density has no
        # atoms so its CDF is the piecewise-linear interpolant of these knots
        self._cum = np.concatenate(([0.0], np.cumsum(self.values * np.diff(self.breaks))))

    # -- classmethod constructors ------------------------------------------------

    @classmethod
    def lebesgue(cls):
        """Uniform density on [0,1]."""
        return cls(breaks=(0.0, 1.0), values=(1.0,))

    @classmethod
    def midpoint_atom(cls):
        """Unit atom at 1/2 (every split is exactly in half)."""
        return cls(atoms=[(0.5, 1.0)])

    @classmethod
    def atom_pair(cls, a, weight=0.5, rest_uniform=False):
        """Symmetric atoms at a and 1-a, optionally topped up with a uniform density."""
        a = float(a)
        atoms = [(a, weight)] if a == 0.5 else [(a, weight), (1.0 - a, weight)]
        total_atom = sum(w for _, w in atoms)
        if rest_uniform:
            if total_atom > 1.0 + MASS_TOL:
                raise ValueError("atom weights exceed unit mass")
            return cls(atoms=atoms, values=(1.0 - total_atom,))
        if abs(total_atom - 1.0) > MASS_TOL:
            raise ValueError("atom weights must sum to 1 without a density part")
        return cls(atoms=atoms)

    # -- measure queries ----------------------------------------------------------

    def density_cdf(self, x):
        """Integral of the density part over [0, x]."""
        return np.interp(np.clip(x, 0.0, 1.0), self.breaks, self._cum)

    def atom_at(self, x, tol=_GRID_SNAP):
        """Total weight of atoms located at x (to within tol)."""
        return float(sum(w for a, w in self.atoms if abs(a - x) <= tol))

    def open_interval(self, lo, hi):
        """Measure of the open interval (lo, hi): density plus strictly interior atoms."""
        if hi <= lo:
            return 0.0
        dens = float(self.density_cdf(hi) - self.density_cdf(lo))
        atom = sum(
            w for a, w in self.atoms
            if lo + _GRID_SNAP < a < hi - _GRID_SNAP
        )
        return dens + float(atom)

    def total_mass(self):
        return float(self._cum[-1] + sum(w for _, w in self.atoms))

    def first_moment(self, upto=1.0):
        """2 * integral of s over [0, upto]; equals 1 at upto=1 for admissible measures."""
        out = 0.0
        for a, w in self.atoms:
            if a < upto - _GRID_SNAP:
                out += a * w
            elif abs(a - upto) <= _GRID_SNAP:
                out += 0.5 * a * w
        for r in range(len(self.values)):
            lo, hi = self.breaks[r], min(self.breaks[r + 1], upto)
            if hi > lo:
                out += self.values[r] * 0.5 * (hi * hi - lo * lo)
        return 2.0 * out

    def symmetry_defect(self, nprobe=257):
        """max over probe intervals (a,b) of |m(a,b) - m(1-b,1-a)|, plus atom mismatches."""
        grid = np.linspace(0.0, 1.0, nprobe)
        worst = 0.0
        for a, b in zip(grid[:-1], grid[1:]):
            worst = max(worst, abs(self.open_interval(a, b) - self.open_interval(1 - b, 1 - a)))
        for a, _ in self.atoms:
            worst = max(worst, abs(self.atom_at(a) - self.atom_at(1.0 - a)))
        return worst

    def validate(self):
        if abs(self.total_mass() - 1.0) > MASS_TOL:
            raise ValueError(f"measure mass {self.total_mass()!r} != 1")
        if self.symmetric and self.symmetry_defect() > 1e-10:
            raise ValueError("measure is flagged symmetric but fails the symmetry probe")
        return self


@dataclass
class AxiomReport:
    """Worst-case admissibility defects of a kernel, per axiom."""

    row_sum_defect: float
    row_sum_argmax: int
    symmetry_defect: float
    symmetry_argmax: int
    mass_identity_defect: float
    mass_identity_argmax: int
    min_entry: float

    def ok(self, row_tol=MASS_TOL, sym_tol=SYM_TOL, mass_tol=1e-10):
        return (
            self.row_sum_defect <= row_tol
            and self.symmetry_defect <= sym_tol
            and self.mass_identity_defect <= mass_tol
            and self.min_entry >= -row_tol
        )


class FragmentationKernel:
    """Dense triangular storage of k[i,j] for 2 <= j <= jmax, 1 <= i <= j-1.

    Rows are packed contiguously; ``row(j)`` views the j-th law. Instances are
    immutable after construction and safe to share across workers.
    """

    def __init__(self, jmax, data, provenance="custom", meta=None):
        jmax = int(jmax)
        if jmax < 2:
            raise ValueError("jmax must be >= 2")
        data = np.array(data, dtype=float)
        if data.shape != (jmax * (jmax - 1) // 2,):
            raise ValueError("packed data length does not match jmax")
        self.jmax = jmax
        self.data = data
        self.data.flags.writeable = False
        # start[j] indexes the first entry of row j; start[jmax+1] closes the layout
        self.start = np.array(
            [(j - 2) * (j - 1) // 2 if j >= 2 else 0 for j in range(jmax + 2)],
            dtype=np.int64,
        )
        self.provenance = provenance
        self.meta = dict(meta or {})

    @classmethod
    def from_rows(cls, rows, provenance="custom", meta=None):
        """Build from a list of per-j vectors (k[1,j]..k[j-1,j]) for j=2..jmax."""
        jmax = len(rows) + 1
        data = np.concatenate([np.asarray(r, dtype=float) for r in rows]) if rows else np.zeros(0)
        for j, r in enumerate(rows, start=2):
            if len(r) != j - 1:
                raise ValueError(f"row for j={j} must have {j - 1} entries")
        return cls(jmax, data, provenance=provenance, meta=meta)

    def row(self, j):
        if not 2 <= j <= self.jmax:
            raise ValueError(f"row j={j} outside [2, {self.jmax}]")
        return self.data[self.start[j] : self.start[j + 1]]

    def k(self, i, j):
        """Entry k[i,j]; zero outside the admissible triangle."""
        if j < 2 or j > self.jmax or i < 1 or i >= j:
            return 0.0
        return float(self.data[self.start[j] + i - 1])

    def rows(self):
        for j in range(2, self.jmax + 1):
            yield j, self.row(j)

    def partial_sums(self, j):
        """S[p] = sum_{r<p} k[r,j] for p = 0..j (k[0,j] = 0)."""
        s = np.zeros(j + 1)
        s[2:] = np.cumsum(self.row(j))
        return s

    def small_fragment_mass(self, n0, jmax=None):
        """w[j] = sum_{i<n0} i*k[i,j] for j = n0..jmax (fragments that dissolve)."""
        jmax = self.jmax if jmax is None else jmax
        if jmax > self.jmax:
            raise ValueError("jmax exceeds kernel size")
        i = np.arange(1, n0, dtype=float)
        out = np.zeros(jmax - n0 + 1)
        for j in range(n0, jmax + 1):
            m = min(n0, j)
            out[j - n0] = float(np.dot(i[: m - 1], self.row(j)[: m - 1]))
        return out

    def gain_operator(self, n0, N, backend=None):
        """Triangular gain operator over the size window [n0, N]."""
        return TriGainOperator(self.data, self.start, n0, N, backend=backend)

    # -- persistence ---------------------------------------------------------------

    def save(self, path):
        """Structured text export: a header line, then one row of entries per j."""
        with open(path, "w") as fh:
            fh.write(f"aggfrag-kernel 1 jmax={self.jmax} provenance={self.provenance}\n")
            for j, row in self.rows():
                fh.write(" ".join(format(v, ".17g") for v in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) < 4 or header[0] != "aggfrag-kernel":
                raise ValueError(f"{path}: not a kernel file")
            jmax = int(header[2].split("=", 1)[1])
            provenance = header[3].split("=", 1)[1]
            rows = []
            for j in range(2, jmax + 1):
                parts = fh.readline().split()
                if len(parts) != j - 1:
                    raise ValueError(f"{path}: row j={j} has {len(parts)} entries, wanted {j - 1}")
                rows.append([float(p) for p in parts])
        return cls.from_rows(rows, provenance=provenance)


def uniform_kernel(jmax):
    """Every interior joint equally likely: k[i,j] = 1/(j-1)."""
    jmax = int(jmax)
    if jmax < 2:
        raise ValueError("jmax must be >= 2")
    rows = [np.full(j - 1, 1.0 / (j - 1)) for j in range(2, jmax + 1)]
    return FragmentationKernel.from_rows(rows, provenance="uniform")


def kernel_from_measure(k0, jmax):
    """Discretize a symmetric self-similar measure into fragment laws.

    For row j the unit interval is cut into j-1 cells; cell i receives the
    open-interval mass plus half of each atom sitting on its boundaries, and
    the extreme fragments i=1, j-1 additionally absorb half the endpoint atom
    weight so the full law stays normalized.
    """
    if not isinstance(k0, SelfSimilarMeasure):
        raise ValueError("k0 must be a SelfSimilarMeasure")
    if not k0.symmetric:
        raise ValueError("k0 must be symmetric")
    k0.validate()
    jmax = int(jmax)
    if jmax < 2:
        raise ValueError("jmax must be >= 2")

    w_end = k0.atom_at(0.0)
    rows = []
    for j in range(2, jmax + 1):
        d = j - 1
        grid = np.arange(d + 1) / d
        row = np.empty(d)
        for i in range(1, d + 1):
            row[i - 1] = k0.open_interval(grid[i - 1], grid[i]) \
                + 0.5 * k0.atom_at(grid[i - 1]) + 0.5 * k0.atom_at(grid[i])
        row[0] += 0.5 * w_end
        row[d - 1] += 0.5 * w_end
        rows.append(row)
    return FragmentationKernel.from_rows(rows, provenance="from_measure", meta={"measure": k0})


def boundary_weighted_kernel(eps, r, k0table, jmax):
    """End-dominated breakage: ends carry (1 - eps*r_j)/2 each, the interior
    carries eps*r_j spread along the (renormalized) interior of ``k0table``.

    ``r`` is a per-size weight vector indexed so that r[j] is used for row j
    (entries below j=2 are ignored); a scalar is broadcast. Rows j <= 3 have
    no interior joints, so their end weights are 1/2 regardless of eps.
    """
    jmax = int(jmax)
    if jmax < 2:
        raise ValueError("jmax must be >= 2")
    if k0table.jmax < jmax:
        raise ValueError("interior table smaller than jmax")
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        r = np.full(jmax + 1, float(r))
    if len(r) < jmax + 1:
        raise ValueError("r must be indexable up to jmax")
    if np.any(eps * r[2 : jmax + 1] > 1.0 + 1e-15):
        bad = 2 + int(np.argmax(eps * r[2 : jmax + 1] > 1.0 + 1e-15))
        raise ValueError(f"eps*r[{bad}] > 1 would make the end weight negative")

    rows = [np.array([1.0])]
    for j in range(3, jmax + 1):
        row = np.zeros(j - 1)
        if j == 3:
            row[:] = 0.5
        else:
            end = 0.5 * (1.0 - eps * r[j])
            row[0] = row[-1] = end
            if eps * r[j] > 0.0:
                interior = np.array(k0table.row(j)[1 : j - 2], dtype=float)
                s = interior.sum()
                if s <= 0.0:
                    raise ValueError(f"interior of base row j={j} is not renormalizable")
                row[1 : j - 2] = eps * r[j] * interior / s
        rows.append(row)
    return FragmentationKernel.from_rows(
        rows, provenance="boundary_weighted", meta={"eps": eps}
    )


def check_axioms(kernel):
    """Report-only admissibility audit; constructors enforce, this diagnoses."""
    row_defect = sym_defect = mass_defect = 0.0
    row_arg = sym_arg = mass_arg = 2
    min_entry = np.inf
    for j, row in kernel.rows():
        d = abs(row.sum() - 1.0)
        if d > row_defect:
            row_defect, row_arg = d, j
        d = float(np.max(np.abs(row - row[::-1]))) if len(row) else 0.0
        if d > sym_defect:
            sym_defect, sym_arg = d, j
        i = np.arange(1, j, dtype=float)
        d = abs(2.0 * float(np.dot(i, row)) - j)
        if d > mass_defect:
            mass_defect, mass_arg = d, j
        min_entry = min(min_entry, float(row.min()) if len(row) else 0.0)
    return AxiomReport(
        row_sum_defect=row_defect, row_sum_argmax=row_arg,
        symmetry_defect=sym_defect, symmetry_argmax=sym_arg,
        mass_identity_defect=mass_defect, mass_identity_argmax=mass_arg,
        min_entry=min_entry,
    )


def _partial_sum_increments(kernel, j):
    """S[., j+1] - S[., j] for p = 0..j+1."""
    sj = kernel.partial_sums(j)
    sj1 = kernel.partial_sums(j + 1)
    top = j + 2
    a = np.ones(top)
    a[: j + 1] = sj
    b = np.ones(top)
    b[: j + 2] = sj1[: top]
    return b - a


def compactness_modulus(kernel):
    """max over (i,j) of |sum_{p<i} (S[p,j+1] - S[p,j])|.

    Finite for any admissible kernel; measure-built kernels obey the sharp
    bound 2 because consecutive rows sample nested partitions of [0,1].
    """
    if kernel.jmax < 3:
        raise ValueError("need jmax >= 3 to compare consecutive rows")
    worst = 0.0
    for j in range(2, kernel.jmax):
        csum = np.cumsum(_partial_sum_increments(kernel, j))
        worst = max(worst, float(np.max(np.abs(csum))))
    return worst


def strengthened_modulus(kernel):
    """(max j*|S[i,j+1]-S[i,j]|, max j*k[i,j]) - the end-breakage exclusion test.

    Kernels whose mass stays spread over O(j) joints keep both components
    O(1); kernels concentrating on a bounded number of joints grow linearly
    and are reported, not rejected.
    """
    if kernel.jmax < 3:
        raise ValueError("need jmax >= 3 to compare consecutive rows")
    worst_diff = 0.0
    worst_entry = 0.0
    for j in range(2, kernel.jmax):
        incr = _partial_sum_increments(kernel, j)
        worst_diff = max(worst_diff, j * float(np.max(np.abs(incr))))
    for j, row in kernel.rows():
        worst_entry = max(worst_entry, j * float(row.max()))
    return worst_diff, worst_entry


class RepartitionTables:
    """Stepwise cumulative law F(x,y) of the embedded kernel and its primitive G.

    The embedded kernel spreads k[i,j]/eps over the size cell
    [i*eps, (i+1)*eps) for y in [j*eps, (j+1)*eps). F is its CDF in x, G the
    integral of F; G is convex nondecreasing in x and the pair gives
    summation-by-parts pairings without touching the kernel entries.
    """

    def __init__(self, kernel, eps):
        if eps <= 0:
            raise ValueError("eps must be > 0")
        self.kernel = kernel
        self.eps = float(eps)
        self.jmax = kernel.jmax
        # S[p, j] = sum_{r<p} k[r,j]; dense is fine at diagnostic sizes
        self.S = np.zeros((self.jmax + 2, self.jmax + 1))
        for j in range(2, self.jmax + 1):
            self.S[: j + 1, j] = kernel.partial_sums(j)
            self.S[j + 1 :, j] = 1.0
        # per-cell integral of F: eps*S[p] + eps/2 * k[p]  (F is linear on each cell)
        cell = self.eps * self.S[:-1, :] + 0.5 * self.eps * np.diff(self.S, axis=0)
        self.Gcell = np.vstack([np.zeros(self.jmax + 1), np.cumsum(cell, axis=0)])

    def _locate(self, x, y):
        if x < 0 or y < 0 or x > self.eps * self.jmax or y > self.eps * self.jmax:
            raise ValueError(
                f"(x={x}, y={y}) outside [0, {self.eps * self.jmax}]"
            )
        j = min(int(np.floor(y / self.eps)), self.jmax)
        i = min(int(np.floor(x / self.eps)), self.jmax)
        return i, j

    def F(self, x, y):
        i, j = self._locate(x, y)
        if j < 2:
            return 0.0
        kij = self.kernel.k(i, j)
        return float(self.S[i, j] + (x - i * self.eps) / self.eps * kij)

    def G(self, x, y):
        i, j = self._locate(x, y)
        if j < 2:
            return 0.0
        t = x - i * self.eps
        kij = self.kernel.k(i, j)
        return float(self.Gcell[i, j] + t * self.S[i, j] + 0.5 * t * t / self.eps * kij)

    def pair_by_parts(self, phi, dphi, y):
        """integral of phi d(k_eps(., y)) computed as phi(Y) - int F(x,y) phi'(x) dx.

        The F-integral uses per-cell 5-point Gauss, exact for the piecewise
        linear F against smooth phi' to quadrature accuracy.
        """
        _, j = self._locate(0.0, y)
        if j < 2:
            return 0.0
        top = j * self.eps
        total = phi(top) * self.F(top, y)
        acc = 0.0
        for i in range(j):
            a, b = i * self.eps, (i + 1) * self.eps
            xs = 0.5 * (a + b) + 0.5 * (b - a) * GAUSS5_NODES
            fs = np.array([self.F(x, y) for x in xs])
            acc += 0.5 * (b - a) * float(np.dot(GAUSS5_WEIGHTS, fs * dphi(xs)))
        return float(total - acc)

    def pair_direct(self, phi, y):
        """Direct pairing sum_i k[i,j] * mean of phi over the size cell."""
        _, j = self._locate(0.0, y)
        if j < 2:
            return 0.0
        acc = 0.0
        for i in range(1, j):
            a, b = i * self.eps, (i + 1) * self.eps
            xs = 0.5 * (a + b) + 0.5 * (b - a) * GAUSS5_NODES
            cell_mean = 0.5 * float(np.dot(GAUSS5_WEIGHTS, phi(xs)))
            acc += self.kernel.k(i, j) * cell_mean
        return acc

    def small_fragment_first_moment(self, n0):
        """(n0*eps)*F(n0*eps, y) - G(n0*eps, y) for each grid y = j*eps.

        This is the mass carried by fragments below the minimal stable size;
        its convergence as eps -> 0 is measured by the sweep harness.
        """
        x = n0 * self.eps
        ys = np.arange(2, self.jmax + 1) * self.eps
        vals = np.array([x * self.F(x, y) - self.G(x, y) for y in ys])
        return ys, vals


def repartition_tables(kernel, eps):
    return RepartitionTables(kernel, eps)

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled triangular fragmentation-gain kernel.

Packed layout: row j (2 <= j <= jmax) holds the j-1 entries
k[1,j]..k[j-1,j] starting at ``start[j]``.
"""


def packed_tri_gain(const double[::1] data, const long[::1] start,
                    long n0, long N, const double[::1] w, double[::1] out):
    """out[i-n0] += sum_{j>i} w[j-n0] * k[i,j] for n0 <= i <= N.

    ``w`` is indexed by j-n0 and typically carries beta_j*u_j; ``out`` must
    be zero-filled by the caller. Accumulation is sequential in j, so
    trailing zero entries of ``w`` leave the result bit-identical.
    """
    cdef long i, j, base
    cdef double wj
    for j in range(n0 + 1, N + 1):
        wj = w[j - n0]
        if wj == 0.0:
            continue
        base = start[j] - 1
        for i in range(n0, j):
            out[i - n0] += wj * data[base + i]

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for character-sum accumulation.

Mirrors `_kernels_py`; see there for the contract.
"""

from cpython cimport array
from array import array as _array

COMPILED = True


def build_value_table(dlog_exps, int n_keys, int ngens, nums, long long modulus):
    cdef array.array exps = dlog_exps
    cdef array.array coeffs = nums
    cdef array.array out = _array("i", bytes(4 * n_keys))
    cdef int[::1] ev = exps
    cdef long long[::1] cv = coeffs
    cdef int[::1] ov = out
    cdef Py_ssize_t key, g, base
    cdef long long acc
    for key in range(n_keys):
        base = key * ngens
        if ngens and ev[base] < 0:
            ov[key] = -1
            continue
        acc = 0
        for g in range(ngens):
            acc += ev[base + g] * cv[g]
        acc %= modulus
        if acc < 0:
            acc += modulus
        ov[key] = <int> acc
    return out


def accumulate_affine(
    counts,
    touched,
    value_table,
    long long mx,
    long long my,
    long long a1,
    long long b1,
    long long a2,
    long long b2,
    long long count,
    long long k0,
    long long k1,
    long long pmod,
    long long n_touched,
):
    cdef array.array counts_a = counts
    cdef array.array touched_a = touched
    cdef array.array vt_a = value_table
    cdef long long[::1] cnt = counts_a
    cdef long long[::1] tch = touched_a
    cdef int[::1] vt = vt_a
    cdef long long i, kx, ky, k, idx, nt
    cdef int j
    nt = n_touched
    for i in range(count):
        kx = (a1 + b1 * i) % mx
        ky = (a2 + b2 * i) % my
        j = vt[kx * my + ky]
        if j < 0:
            continue
        k = (k0 + k1 * i) % pmod
        idx = j * pmod + k
        if cnt[idx] == 0:
            tch[nt] = idx
            nt += 1
        cnt[idx] += 1
    return nt

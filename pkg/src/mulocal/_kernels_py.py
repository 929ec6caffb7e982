"""Pure-Python fallback for the hot character-sum kernels.

Same signatures and semantics as the compiled module `_kernels`; selection
happens in `_accel`.  Keys pack residues of x + y*theta as key = x*my + y.
"""

from __future__ import annotations

from array import array

COMPILED = False


def build_value_table(dlog_exps: array, n_keys: int, ngens: int, nums: array, modulus: int) -> array:
    """Per-key character exponent: sum of dlog exponents times `nums`, mod `modulus`.

    Non-unit keys are marked by -1 in their first dlog slot and map to -1.
    """
    out = array("i", bytes(4 * n_keys))
    for key in range(n_keys):
        base = key * ngens
        if ngens and dlog_exps[base] < 0:
            out[key] = -1
            continue
        acc = 0
        for g in range(ngens):
            acc += dlog_exps[base + g] * nums[g]
        out[key] = acc % modulus
    return out


def accumulate_affine(
    counts: array,
    touched: array,
    value_table: array,
    mx: int,
    my: int,
    a1: int,
    b1: int,
    a2: int,
    b2: int,
    count: int,
    k0: int,
    k1: int,
    pmod: int,
    n_touched: int,
) -> int:
    """Tally (character-exponent, additive-exponent) pairs over an affine sweep.

    Point i has residue key ((a1+b1*i) mod mx, (a2+b2*i) mod my) and additive
    exponent (k0+k1*i) mod pmod; non-unit keys are skipped.  Returns the
    updated number of touched slots in `counts` (first touches are appended
    to `touched` so the caller can read out a sparse result).
    """
    for i in range(count):
        kx = (a1 + b1 * i) % mx
        ky = (a2 + b2 * i) % my
        j = value_table[kx * my + ky]
        if j < 0:
            continue
        k = (k0 + k1 * i) % pmod
        idx = j * pmod + k
        if counts[idx] == 0:
            touched[n_touched] = idx
            n_touched += 1
        counts[idx] += 1
    return n_touched

#!/usr/bin/env python3
"""Benchmark the compiled character-sum kernels against the pure-Python fallback.

Runs the same partial-Gauss-sum workload through both implementations and
reports wall times and the speedup.  Values are asserted identical.

Usage: python benchmarks/bench_kernels.py [--ell 7] [--conductor 2] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

from mulocal import _accel, _kernels_py
from mulocal.characters import ArithChar, enumerate_self_dual
from mulocal.local_constants import partial_gauss_sum
from mulocal.local_field import LocalQuadExt

try:
    from mulocal import _kernels
except ImportError:
    _kernels = None


def workload(ell: int, conductor: int):
    ext = LocalQuadExt.inert(ell)
    chars = [ArithChar(c, Fraction(1, 2)) for c in enumerate_self_dual(ext, conductor) if c.conductor() >= 1]
    betas = [
        Fraction(u) * Fraction(ell) ** v
        for v in range(-conductor - 1, conductor + 2)
        for u in range(1, ell)
    ]
    return chars, betas


def deep_workload(ell: int):
    """Kernel-bound variant: very deep coefficients mean large enumeration
    boxes whose sums vanish, so the inner loop dominates."""
    ext = LocalQuadExt.inert(ell)
    chars = [ArithChar(c, Fraction(1, 2)) for c in enumerate_self_dual(ext, 1) if c.conductor() >= 1][:3]
    betas = [Fraction(u, ell**v) for v in (5, 6) for u in range(1, ell)]
    return chars, betas


def run(chars, betas):
    values = []
    for chi in chars:
        object.__setattr__(chi.finite_part.pres, "_value_tables", {})
        for beta in betas:
            values.append(partial_gauss_sum(chi, beta).value)
    return values


def time_impl(name, impl, chars, betas, repeat):
    _accel.build_value_table = impl.build_value_table
    _accel.accumulate_affine = impl.accumulate_affine
    best, values = None, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        values = run(chars, betas)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    print(f"{name:>12}: {best:8.3f} s  ({len(values)} gauss sums)")
    return best, values


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--ell", type=int, default=7)
    parser.add_argument("--conductor", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    for label, (chars, betas) in [
        (f"grid (ell={args.ell}, conductor <= {args.conductor})", workload(args.ell, args.conductor)),
        (f"deep coefficients (ell={args.ell})", deep_workload(args.ell)),
    ]:
        print(f"workload: {label}: {len(chars)} characters x {len(betas)} coefficients")
        t_py, v_py = time_impl("pure python", _kernels_py, chars, betas, args.repeat)
        if _kernels is None:
            print("compiled kernels unavailable; nothing to compare")
            continue
        t_c, v_c = time_impl("compiled", _kernels, chars, betas, args.repeat)
        assert all(a == b for a, b in zip(v_py, v_c)), "implementations disagree"
        print(f"{'speedup':>12}: {t_py / t_c:8.2f}x  (values identical)")


if __name__ == "__main__":
    main()

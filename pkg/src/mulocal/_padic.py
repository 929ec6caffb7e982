"""Low-level machinery for reading p-adic valuations in cyclotomic fields.

Everything here works with dense integer polynomials (lists of coefficients,
lowest degree first).  The pipeline is:

  * factor the cyclotomic polynomial of the prime-to-p conductor modulo p
    (all irreducible factors share the degree f = ord(p mod n)),
  * Hensel-lift the chosen factor to modulus p^K,
  * realise Q_p(zeta_N) as W[t]/(g) with W = (Z/p^K)[x]/(h) unramified and
    g(t) the Eisenstein polynomial of zeta_{p^a} - 1,
  * evaluate elements monomial by monomial and read the valuation off the
    coefficient grid.

Coefficient grids are exact up to the working modulus p^K, so a valuation is
certified the moment any grid entry is nonzero mod p^K.
"""

from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache
from math import gcd


def _trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_add(a, b, m):
    n = max(len(a), len(b))
    out = [0] * n
    for i, x in enumerate(a):
        out[i] = x
    for i, x in enumerate(b):
        out[i] = (out[i] + x) % m
    return _trim(out)


def poly_sub(a, b, m):
    n = max(len(a), len(b))
    out = [0] * n
    for i, x in enumerate(a):
        out[i] = x
    for i, x in enumerate(b):
        out[i] = (out[i] - x) % m
    return _trim(out)


def poly_mul(a, b, m):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return _trim([c % m for c in out])


def poly_divmod(a, b, m):
    """Divide by b, whose leading coefficient must be invertible mod m."""
    a = [c % m for c in a]
    _trim(a)
    db = len(b) - 1
    lead_inv = pow(b[-1], -1, m)
    q = [0] * max(len(a) - db, 0)
    while len(a) - 1 >= db and a:
        k = len(a) - 1 - db
        c = (a[-1] * lead_inv) % m
        q[k] = c
        for i, y in enumerate(b):
            a[k + i] = (a[k + i] - c * y) % m
        _trim(a)
    return _trim(q), a


def poly_mod(a, b, m):
    return poly_divmod(a, b, m)[1]


def poly_gcd(a, b, p):
    """Monic gcd over the field Z/p."""
    a = [c % p for c in a]
    b = [c % p for c in b]
    _trim(a)
    _trim(b)
    while b:
        a, b = b, poly_mod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [(c * inv) % p for c in a]
    return a


def poly_powmod(a, e, mod, m):
    result = [1]
    base = poly_mod(a, mod, m)
    while e:
        if e & 1:
            result = poly_mod(poly_mul(result, base, m), mod, m)
        e >>= 1
        if e:
            base = poly_mod(poly_mul(base, base, m), mod, m)
    return result


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of the n-th cyclotomic polynomial."""
    if n == 1:
        return (-1, 1)
    num = [0] * (n + 1)
    num[0], num[n] = -1, 1
    for d in range(1, n):
        if n % d == 0:
            q, r = _int_poly_divmod(num, list(cyclotomic_poly(d)))
            assert not r, "cyclotomic division must be exact"
            num = q
    return tuple(num)


def _int_poly_divmod(a, b):
    a = list(a)
    db = len(b) - 1
    assert b[-1] == 1
    q = [0] * max(len(a) - db, 0)
    while len(a) - 1 >= db and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) - 1 < db:
            break
        k = len(a) - 1 - db
        c = a[-1]
        q[k] = c
        for i, y in enumerate(b):
            a[k + i] -= c * y
    while a and a[-1] == 0:
        a.pop()
    return q, a


def multiplicative_order(a: int, n: int) -> int:
    if n == 1:
        return 1
    assert gcd(a, n) == 1
    k, x = 1, a % n
    while x != 1:
        x = (x * a) % n
        k += 1
    return k


@lru_cache(maxsize=None)
def factor_cyclotomic_mod_p(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """All monic irreducible factors of Phi_n mod p, sorted; requires p odd, p coprime to n.

    Phi_n is squarefree mod p and splits into phi(n)/f irreducibles of the
    common degree f = ord(p mod n); splitting is by seeded Cantor-Zassenhaus.
    """
    assert p > 2 and (n == 1 or gcd(n, p) == 1)
    phi = [c % p for c in cyclotomic_poly(n)]
    _trim(phi)
    f = multiplicative_order(p, n)
    if f == len(phi) - 1:
        return (tuple(phi),)
    rng = random.Random(n * 1_000_003 + p)
    exponent = (p**f - 1) // 2
    done, stack = [], [phi]
    while stack:
        h = stack.pop()
        if len(h) - 1 == f:
            done.append(tuple(h))
            continue
        while True:
            r = [rng.randrange(p) for _ in range(len(h) - 1)]
            if not _trim(list(r)):
                continue
            s = poly_powmod(r, exponent, h, p)
            g = poly_gcd(poly_sub(s, [1], p), h, p)
            if 0 < len(g) - 1 < len(h) - 1:
                q, rem = poly_divmod(h, g, p)
                assert not rem
                stack.extend([g, q])
                break
    return tuple(sorted(done))


def hensel_lift_factor(f_int, h0, p: int, K: int):
    """Lift the monic factor h0 of f modulo p to a monic factor modulo p^K."""
    target = p**K
    f0 = [c % p for c in f_int]
    g0, rem = poly_divmod(f0, list(h0), p)
    assert not rem, "h0 must divide f mod p"
    # Bezout: s*g + t*h = 1 mod p (extended Euclid over Z/p).
    s, t = _poly_xgcd_unit(g0, list(h0), p)
    m = p
    g, h = g0, list(h0)
    while m < target:
        m2 = m * m
        fm = [c % m2 for c in f_int]
        e = poly_sub(fm, poly_mul(g, h, m2), m2)
        q, r = poly_divmod(poly_mul(s, e, m2), h, m2)
        g = poly_add(g, poly_add(poly_mul(t, e, m2), poly_mul(q, g, m2), m2), m2)
        h = poly_add(h, r, m2)
        b = poly_sub(poly_add(poly_mul(s, g, m2), poly_mul(t, h, m2), m2), [1], m2)
        c, d = poly_divmod(poly_mul(s, b, m2), h, m2)
        s = poly_sub(s, d, m2)
        t = poly_sub(t, poly_add(poly_mul(t, b, m2), poly_mul(c, g, m2), m2), m2)
        m = m2
    h = [c % target for c in h]
    _trim(h)
    assert h[-1] == 1
    g = [c % target for c in g]
    assert not poly_sub([c % target for c in f_int], poly_mul(g, h, target), target)
    return h


def _poly_xgcd_unit(a, b, p):
    """Return (s, t) with s*a + t*b = 1 mod p for coprime a, b."""
    r0, r1 = [c % p for c in a], [c % p for c in b]
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while _trim(list(r1)):
        q, r = poly_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, poly_sub(s0, poly_mul(q, s1, p), p)
        t0, t1 = t1, poly_sub(t0, poly_mul(q, t1, p), p)
    assert len(r0) == 1
    inv = pow(r0[0], -1, p)
    s = [(c * inv) % p for c in s0]
    t = [(c * inv) % p for c in t0]
    return s, t


def min_poly_of_power(h, p: int, e: int) -> tuple[int, ...]:
    """Monic minimal polynomial over F_p of x^e in F_p[x]/(h)."""
    f = len(h) - 1
    y = poly_powmod([0, 1], e, list(h), p)
    # rows of powers y^0, y^1, ... reduced against pivots
    basis = {}  # pivot index -> (reduced row, expression in terms of powers)
    power = [1]
    for d in range(f + 1):
        row = list(power) + [0] * (f - len(power))
        expr = [0] * (d + 1)
        expr[d] = 1
        for piv, (prow, pexpr) in basis.items():
            c = row[piv] % p
            if c:
                for i in range(f):
                    row[i] = (row[i] - c * prow[i]) % p
                for i in range(len(pexpr)):
                    expr[i] = (expr[i] - c * pexpr[i]) % p
        nz = next((i for i in range(f) if row[i]), None)
        if nz is None:
            # x^e satisfies expr(y) = 0; make monic in top power
            lead_inv = pow(expr[d], -1, p)
            out = [(c * lead_inv) % p for c in expr]
            return tuple(out)
        inv = pow(row[nz], -1, p)
        basis[nz] = ([(c * inv) % p for c in row], [(c * inv) % p for c in expr])
        power = poly_mod(poly_mul(power, y, p), list(h), p)
    raise AssertionError("no minimal polynomial found")


def taylor_shift_one(coeffs):
    """Integer polynomial f(x) -> f(1+x)."""
    out = [0] * len(coeffs)
    for c in reversed(coeffs):
        # out = out*(1+x) + c
        prev = list(out)
        for i in range(len(out) - 1, 0, -1):
            out[i] = prev[i] + prev[i - 1]
        out[0] = prev[0] + c
    return out


def int_valuation(n: int, p: int) -> int:
    assert n != 0
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class EvaluationTables:
    """Evaluation of Q(zeta_N) at one prime above p, to K p-adic digits.

    N = p^a * nprime.  Elements are accumulated on the grid W-coefficients x
    t-powers; `eval_terms` returns the exact valuation as a Fraction, or None
    when every grid entry vanished mod p^K (caller escalates K).
    """

    def __init__(self, p: int, K: int, a: int, nprime: int, h_mod_p):
        self.p = p
        self.K = K
        self.a = a
        self.nprime = nprime
        self.pk = p**K
        self.pa = p**a
        self.f = len(h_mod_p) - 1
        self.e = (p ** (a - 1)) * (p - 1) if a >= 1 else 1
        self.h = hensel_lift_factor(cyclotomic_poly(nprime), h_mod_p, p, K) if nprime > 1 else [0, 1]
        if self.nprime == 1:
            self.f = 1
        if a >= 1:
            g = taylor_shift_one(list(cyclotomic_poly(self.pa)))
            self.g = [c % self.pk for c in g]
        else:
            self.g = [0, 1]
        # zeta_N = zeta_{p^a}^alpha * zeta_{nprime}^beta with alpha*nprime + beta*p^a = 1
        if a >= 1 and nprime > 1:
            self.alpha = pow(nprime, -1, self.pa)
            self.beta = pow(self.pa, -1, nprime)
        elif a >= 1:
            self.alpha, self.beta = 1, 0
        else:
            self.alpha, self.beta = 0, 1 if nprime > 1 else 0
        self._xpow: dict[int, list[int]] = {}
        self._zpow: dict[int, list[int]] = {}

    def xpow(self, j: int) -> list[int]:
        j %= self.nprime if self.nprime > 1 else 1
        row = self._xpow.get(j)
        if row is None:
            row = poly_powmod([0, 1], j, self.h, self.pk) if self.nprime > 1 else [1]
            row = row + [0] * (self.f - len(row))
            self._xpow[j] = row
        return row

    def zpow(self, gamma: int) -> list[int]:
        gamma %= self.pa
        row = self._zpow.get(gamma)
        if row is None:
            row = poly_powmod([1, 1], gamma, self.g, self.pk) if self.a >= 1 else [1]
            row = row + [0] * (self.e - len(row))
            self._zpow[gamma] = row
        return row

    def eval_terms(self, terms) -> Fraction | None:
        """terms: iterable of (exponent, integer coefficient); value is sum c*zeta_N^i."""
        e, f, pk = self.e, self.f, self.pk
        grid = [[0] * f for _ in range(e)]
        for i, c in terms:
            c %= pk
            if not c:
                continue
            gamma = (i * self.alpha) % self.pa if self.a >= 1 else 0
            j = (i * self.beta) % self.nprime if self.nprime > 1 else 0
            zrow = self.zpow(gamma)
            xrow = self.xpow(j)
            for u in range(e):
                zu = zrow[u]
                if zu:
                    cz = (c * zu) % pk
                    gu = grid[u]
                    for k in range(f):
                        if xrow[k]:
                            gu[k] = (gu[k] + cz * xrow[k]) % pk
        best: Fraction | None = None
        p = self.p
        for u in range(e):
            for entry in grid[u]:
                if entry:
                    cand = Fraction(int_valuation(entry, p)) + Fraction(u, e)
                    if best is None or cand < best:
                        best = cand
        return best

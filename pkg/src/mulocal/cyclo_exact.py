"""Exact arithmetic in cyclotomic fields with formal square-root scales,
and p-adic valuations at a chosen prime above p.

Elements of Q(zeta_N) are stored in canonical form: the power basis
{zeta_N^i : 0 <= i < phi(N)} reduced modulo the N-th cyclotomic polynomial,
with exact rational coefficients.  Results of arithmetic are shrunk to the
smallest conductor the reduction detects (never one congruent to 2 mod 4),
and equality across conductors goes through the compositum.

`ScaledCyclotomic` carries an extra factor sqrt(r) formally, with r a positive
squarefree integer; the square root means the positive real one, and
`to_cyclotomic` replaces it by its exact quadratic-Gauss-sum expression when
an equality or subtraction has to cross the formal boundary.

`PrimeAbovePChoice` pins a prime of Q(zeta_N) above p: an irreducible factor
of the reduction mod p of the cyclotomic polynomial of the prime-to-p part of
the conductor, extended coherently (consistent on intersections) as new
conductors are encountered, together with the canonical totally ramified part
generated by zeta_{p^a} - 1.  Valuations are computed by precision-escalating
evaluation and are never reported unless certified exact.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from math import gcd

from . import _padic
from .errors import IncompatiblePrimeChoiceError, PrecisionError

__all__ = [
    "Cyclotomic",
    "ScaledCyclotomic",
    "PadicVal",
    "PrimeAbovePChoice",
    "cyc_arith",
    "complex_conjugate",
    "padic_valuation",
    "rational_valuation",
]


@lru_cache(maxsize=None)
def euler_phi(n: int) -> int:
    out, m, q = 1, n, 2
    while q * q <= m:
        if m % q == 0:
            out *= q - 1
            m //= q
            while m % q == 0:
                out *= q
                m //= q
        q += 1
    if m > 1:
        out *= m - 1
    return out


@lru_cache(maxsize=None)
def _reduction_rows(n: int) -> tuple[tuple[int, ...], ...]:
    """Rows expressing x^i mod Phi_n, phi(n) <= i < n, in the power basis."""
    phi = euler_phi(n)
    cyc = _padic.cyclotomic_poly(n)
    base = tuple(-c for c in cyc[:phi])  # x^phi = base
    rows = [base]
    for _ in range(phi + 1, n):
        prev = rows[-1]
        shifted = [0] + list(prev[:-1])
        top = prev[-1]
        if top:
            shifted = [s + top * b for s, b in zip(shifted, base)]
        rows.append(tuple(shifted))
    return tuple(rows)


@lru_cache(maxsize=None)
def _prime_power_split(n: int) -> tuple[int, int] | None:
    """(ell, m) if n = ell^m for a prime ell and m >= 1, else None."""
    if n < 2:
        return None
    q = 2
    m = n
    while q * q <= m:
        if m % q == 0:
            while m % q == 0:
                m //= q
            return (q, _exact_log(n, q)) if m == 1 else None
        q += 1
    return (m, 1)


def _exact_log(n: int, q: int) -> int:
    k = 0
    while n > 1:
        n //= q
        k += 1
    return k


def _canonical(n: int, terms: dict[int, Fraction]) -> tuple[Fraction, ...]:
    phi = euler_phi(n)
    # integer-only inputs (the character-sum path) accumulate as ints
    vec = [0] * phi
    if any(e >= phi for e in terms):
        pp = _prime_power_split(n)
        if pp is not None:
            # only relation: the ell consecutive ell^{m-1}-strided blocks sum to 0,
            # so x^e with e >= phi folds onto ell-1 basis exponents
            ell, _ = pp
            step = n // ell
            for e, c in terms.items():
                if not c:
                    continue
                if e < phi:
                    vec[e] += c
                else:
                    r = e - phi
                    for t in range(ell - 1):
                        vec[r + t * step] -= c
        else:
            rows = _reduction_rows(n)
            for e, c in terms.items():
                if not c:
                    continue
                if e < phi:
                    vec[e] += c
                else:
                    for i, r in enumerate(rows[e - phi]):
                        if r:
                            vec[i] += c * r
    else:
        for e, c in terms.items():
            if c:
                vec[e] += c
    return tuple(c if isinstance(c, Fraction) else Fraction(c) for c in vec)


class Cyclotomic:
    """Exact element of Q(zeta_N) in reduced power-basis form."""

    __slots__ = ("conductor", "coeffs")

    def __init__(self, conductor: int, coeffs: tuple[Fraction, ...]):
        # internal: assumes canonical input; use the classmethods to build
        self.conductor = conductor
        self.coeffs = coeffs

    # -- construction ------------------------------------------------------

    @classmethod
    def from_terms(cls, n: int, terms: dict[int, Fraction | int], shrink: bool = True) -> "Cyclotomic":
        """Element sum_i c_i * zeta_n^i from an exponent/coefficient mapping."""
        assert n >= 1
        clean: dict[int, Fraction] = {}
        for e, c in terms.items():
            c = Fraction(c)
            if c:
                clean[e % n] = clean.get(e % n, Fraction(0)) + c
        if n % 4 == 2:
            # Q(zeta_{2m}) = Q(zeta_m) for odd m: zeta_{2m}^i = (-1)^i zeta_m^{i*inv2}
            m = n // 2
            inv2 = pow(2, -1, m) if m > 1 else 0
            moved: dict[int, Fraction] = {}
            for e, c in clean.items():
                sign = -c if e % 2 else c
                key = (e * inv2) % m
                moved[key] = moved.get(key, Fraction(0)) + sign
            return cls.from_terms(m, moved, shrink=shrink)
        vec = _canonical(n, clean)
        elt = cls(n, vec)
        return elt._shrunk() if shrink else elt

    @classmethod
    def from_rational(cls, q) -> "Cyclotomic":
        return cls(1, (Fraction(q),))

    @classmethod
    def zero(cls) -> "Cyclotomic":
        return cls(1, (Fraction(0),))

    @classmethod
    def one(cls) -> "Cyclotomic":
        return cls(1, (Fraction(1),))

    @classmethod
    def root_of_unity(cls, n: int, k: int = 1) -> "Cyclotomic":
        """zeta_n^k."""
        return cls.from_terms(n, {k: 1})

    # -- canonical-form helpers --------------------------------------------

    def _shrunk(self) -> "Cyclotomic":
        support = [i for i, c in enumerate(self.coeffs) if c]
        if not support:
            return Cyclotomic(1, (Fraction(0),)) if self.conductor != 1 else self
        g = self.conductor
        for i in support:
            g = gcd(g, i)
            if g == 1:
                break
        m = self.conductor // g
        if g > 1:
            shrunk = Cyclotomic.from_terms(m, {i // g: self.coeffs[i] for i in support}, shrink=False)
            return shrunk._shrunk()
        if self.conductor % 4 == 2:
            return Cyclotomic.from_terms(self.conductor, dict(enumerate(self.coeffs)), shrink=True)
        return self

    def embed(self, m: int) -> "Cyclotomic":
        """Image in Q(zeta_m); requires conductor | m.  No shrinking."""
        assert m % self.conductor == 0
        step = m // self.conductor
        return Cyclotomic.from_terms(m, {i * step: c for i, c in enumerate(self.coeffs) if c}, shrink=False)

    def minimized(self) -> "Cyclotomic":
        return self._shrunk()

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return all(not c for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(not c for c in self.coeffs[1:])

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("not a rational element")
        return self.coeffs[0]

    # -- arithmetic ----------------------------------------------------------

    def _terms(self) -> dict[int, Fraction]:
        return {i: c for i, c in enumerate(self.coeffs) if c}

    @staticmethod
    def _common(a: "Cyclotomic", b: "Cyclotomic") -> int:
        return a.conductor * b.conductor // gcd(a.conductor, b.conductor)

    def __add__(self, other) -> "Cyclotomic":
        other = _as_cyclotomic(other)
        n = self._common(self, other)
        sa, sb = n // self.conductor, n // other.conductor
        terms: dict[int, Fraction] = {}
        for i, c in self._terms().items():
            terms[i * sa] = terms.get(i * sa, Fraction(0)) + c
        for i, c in other._terms().items():
            terms[i * sb] = terms.get(i * sb, Fraction(0)) + c
        return Cyclotomic.from_terms(n, terms)

    __radd__ = __add__

    def __neg__(self) -> "Cyclotomic":
        return Cyclotomic(self.conductor, tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> "Cyclotomic":
        return self + (-_as_cyclotomic(other))

    def __rsub__(self, other) -> "Cyclotomic":
        return _as_cyclotomic(other) - self

    def __mul__(self, other) -> "Cyclotomic":
        if isinstance(other, (int, Fraction)):
            return Cyclotomic(self.conductor, tuple(c * other for c in self.coeffs))._shrunk()
        other = _as_cyclotomic(other)
        n = self._common(self, other)
        sa, sb = n // self.conductor, n // other.conductor
        terms: dict[int, Fraction] = {}
        for i, ci in self._terms().items():
            for j, cj in other._terms().items():
                e = (i * sa + j * sb) % n
                terms[e] = terms.get(e, Fraction(0)) + ci * cj
        return Cyclotomic.from_terms(n, terms)

    __rmul__ = __mul__

    def inverse(self) -> "Cyclotomic":
        if self.is_zero():
            raise ZeroDivisionError("division by zero in cyclotomic field")
        if self.is_rational():
            return Cyclotomic.from_rational(1 / self.coeffs[0])
        n = self.conductor
        cyc = [Fraction(c) for c in _padic.cyclotomic_poly(n)]
        a = list(self.coeffs)
        # extended Euclid in Q[x]: s*a + t*Phi_n = gcd = constant
        r0, r1 = cyc, a
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while any(r1):
            q, r = _q_poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _q_poly_sub(s0, _q_poly_mul(q, s1))
        const = next(c for c in r0 if c)
        assert all(not c for c in r0[1:]), "gcd with cyclotomic polynomial must be constant"
        inv_terms = {i: c / const for i, c in enumerate(s0) if c}
        return Cyclotomic.from_terms(n, inv_terms)

    def __truediv__(self, other) -> "Cyclotomic":
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero in cyclotomic field")
            return Cyclotomic(self.conductor, tuple(c / other for c in self.coeffs))._shrunk()
        return self * _as_cyclotomic(other).inverse()

    def __rtruediv__(self, other) -> "Cyclotomic":
        return _as_cyclotomic(other) / self

    def __pow__(self, k: int) -> "Cyclotomic":
        if k < 0:
            return self.inverse() ** (-k)
        out, base = Cyclotomic.one(), self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def galois(self, k: int) -> "Cyclotomic":
        """Image under zeta_n -> zeta_n^k, gcd(k, n) = 1."""
        n = self.conductor
        assert gcd(k % n, n) == 1 or n == 1
        return Cyclotomic.from_terms(n, {(i * k) % n: c for i, c in self._terms().items()})

    def conjugate(self) -> "Cyclotomic":
        return self.galois(-1 % self.conductor if self.conductor > 1 else 0)

    # -- comparisons ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if isinstance(other, ScaledCyclotomic):
            return other == self
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        if self.conductor == other.conductor:
            return self.coeffs == other.coeffs
        n = self._common(self, other)
        return self.embed(n).coeffs == other.embed(n).coeffs

    __hash__ = None  # mutable-free but not canonically hashable across conductors

    def __repr__(self) -> str:
        if self.is_rational():
            return f"Cyclotomic({self.coeffs[0]})"
        parts = [f"{c}*z{self.conductor}^{i}" for i, c in self._terms().items()]
        return "Cyclotomic(" + " + ".join(parts) + ")"


def _as_cyclotomic(x) -> Cyclotomic:
    if isinstance(x, Cyclotomic):
        return x
    if isinstance(x, (int, Fraction)):
        return Cyclotomic.from_rational(x)
    raise TypeError(f"cannot coerce {x!r} to Cyclotomic")


def _q_poly_divmod(a, b):
    a = list(a)
    while a and not a[-1]:
        a.pop()
    b = list(b)
    while b and not b[-1]:
        b.pop()
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    while a and len(a) >= len(b):
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = c
        for i, y in enumerate(b):
            a[k + i] -= c * y
        while a and not a[-1]:
            a.pop()
    return q, a


def _q_poly_mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _q_poly_sub(a, b):
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, x in enumerate(a):
        out[i] += x
    for i, x in enumerate(b):
        out[i] -= x
    return out


def cyc_arith(a: Cyclotomic, b: Cyclotomic, op: str) -> Cyclotomic:
    """Exact field arithmetic; operands are auto-embedded into the compositum."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# square-root scales


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = m^2 * s with s squarefree; returns (m, s)."""
    m, s, q = 1, 1, 2
    while q * q <= n:
        if n % q == 0:
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            m *= q ** (e // 2)
            if e % 2:
                s *= q
        q += 1
    return m, s * n


@lru_cache(maxsize=None)
def _sqrt_prime_embed(q: int) -> Cyclotomic:
    """The positive real sqrt(q) for prime q, as an exact cyclotomic element."""
    if q == 2:
        return Cyclotomic.from_terms(8, {1: 1, -1: 1})  # 2cos(pi/4)
    # quadratic Gauss sum: sum legendre(a)*zeta_q^a equals sqrt(q) or i*sqrt(q)
    terms = {a: Fraction(1 if pow(a, (q - 1) // 2, q) == 1 else -1) for a in range(1, q)}
    g = Cyclotomic.from_terms(q, terms)
    if q % 4 == 1:
        return g
    # q = 3 mod 4: g = i*sqrt(q), so sqrt(q) = -i * g = zeta_4^3 * g
    return Cyclotomic.root_of_unity(4, 3) * g


@lru_cache(maxsize=None)
def sqrt_embed(s: int) -> Cyclotomic:
    """Positive sqrt of a squarefree positive integer as a cyclotomic element."""
    assert s >= 1
    out = Cyclotomic.one()
    q = 2
    m = s
    while m > 1:
        if m % q == 0:
            out = out * _sqrt_prime_embed(q)
            m //= q
        q += 1
    return out


class ScaledCyclotomic:
    """base * sqrt(scale): a cyclotomic element times a formal positive square root.

    scale is kept squarefree (a positive integer); square parts and rational
    square roots are absorbed into the base on construction.
    """

    __slots__ = ("base", "scale")

    def __init__(self, base, scale=1):
        base = _as_cyclotomic(base)
        scale = Fraction(scale)
        if scale <= 0:
            raise ValueError("sqrt scale must be positive")
        num, den = scale.numerator, scale.denominator
        # sqrt(num/den) = sqrt(num*den)/den
        m, s = _squarefree_split(num * den)
        base = base * Fraction(m, den)
        if base.is_zero():
            s = 1
        self.base = base
        self.scale = s

    @classmethod
    def from_rational(cls, q) -> "ScaledCyclotomic":
        return cls(Cyclotomic.from_rational(q), 1)

    @classmethod
    def zero(cls) -> "ScaledCyclotomic":
        return cls(Cyclotomic.zero(), 1)

    @classmethod
    def one(cls) -> "ScaledCyclotomic":
        return cls(Cyclotomic.one(), 1)

    def is_zero(self) -> bool:
        return self.base.is_zero()

    def to_cyclotomic(self) -> Cyclotomic:
        """Replace the formal sqrt by its exact cyclotomic embedding."""
        if self.scale == 1:
            return self.base
        return self.base * sqrt_embed(self.scale)

    def conjugate(self) -> "ScaledCyclotomic":
        return ScaledCyclotomic(self.base.conjugate(), self.scale)

    def __mul__(self, other) -> "ScaledCyclotomic":
        if isinstance(other, (int, Fraction, Cyclotomic)):
            return ScaledCyclotomic(self.base * other, self.scale)
        if not isinstance(other, ScaledCyclotomic):
            return NotImplemented
        g = gcd(self.scale, other.scale)
        return ScaledCyclotomic(self.base * other.base * g, (self.scale // g) * (other.scale // g))

    __rmul__ = __mul__

    def __neg__(self) -> "ScaledCyclotomic":
        return ScaledCyclotomic(-self.base, self.scale)

    def __add__(self, other) -> "ScaledCyclotomic":
        if isinstance(other, (int, Fraction, Cyclotomic)):
            other = ScaledCyclotomic(other, 1)
        if not isinstance(other, ScaledCyclotomic):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.scale == other.scale:
            return ScaledCyclotomic(self.base + other.base, self.scale)
        # mixed scales only exist together inside one cyclotomic field
        return ScaledCyclotomic(self.to_cyclotomic() + other.to_cyclotomic(), 1)

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledCyclotomic":
        if isinstance(other, (int, Fraction, Cyclotomic)):
            other = ScaledCyclotomic(other, 1)
        return self + (-other)

    def __rsub__(self, other) -> "ScaledCyclotomic":
        return ScaledCyclotomic(other, 1) - self

    def __truediv__(self, other) -> "ScaledCyclotomic":
        if isinstance(other, (int, Fraction, Cyclotomic)):
            return ScaledCyclotomic(self.base / other, self.scale)
        if not isinstance(other, ScaledCyclotomic):
            return NotImplemented
        # 1/sqrt(s) = sqrt(s)/s
        return ScaledCyclotomic(self.base / (other.base * other.scale), self.scale * other.scale)

    def __pow__(self, k: int) -> "ScaledCyclotomic":
        if k < 0:
            return ScaledCyclotomic.one() / self ** (-k)
        out = ScaledCyclotomic.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Cyclotomic)):
            other = ScaledCyclotomic(other, 1)
        if not isinstance(other, ScaledCyclotomic):
            return NotImplemented
        if self.scale == other.scale:
            return self.base == other.base
        return self.to_cyclotomic() == other.to_cyclotomic()

    __hash__ = None

    def __repr__(self) -> str:
        if self.scale == 1:
            return f"ScaledCyclotomic({self.base!r})"
        return f"ScaledCyclotomic({self.base!r} * sqrt({self.scale}))"


def half_integral_power(n: int, e: Fraction) -> ScaledCyclotomic:
    """n^e for a positive integer n and an exponent with denominator 1 or 2."""
    e = Fraction(e)
    if e.denominator == 1:
        return ScaledCyclotomic(Cyclotomic.from_rational(Fraction(n) ** e.numerator), 1)
    if e.denominator != 2:
        raise ValueError(f"exponent {e} is not half-integral")
    a = e.numerator
    return ScaledCyclotomic(Cyclotomic.from_rational(Fraction(n) ** (a // 2)), n if a % 2 else 1)


def complex_conjugate(x):
    """Field automorphism zeta -> zeta^{-1}; fixes rationals and sqrt scales."""
    if isinstance(x, ScaledCyclotomic):
        return x.conjugate()
    if isinstance(x, Cyclotomic):
        return x.conjugate()
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    raise TypeError(f"cannot conjugate {x!r}")


# ---------------------------------------------------------------------------
# valuations


class PadicVal:
    """A rational p-adic valuation, or +infinity (the valuation of zero)."""

    __slots__ = ("value",)

    def __init__(self, value=None):
        self.value = None if value is None else Fraction(value)

    @classmethod
    def infinite(cls) -> "PadicVal":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PadicVal(other)
        if not isinstance(other, PadicVal):
            return NotImplemented
        if self.is_infinite or other.is_infinite:
            return PadicVal.infinite()
        return PadicVal(self.value + other.value)

    __radd__ = __add__

    def __mul__(self, k: int) -> "PadicVal":
        if self.is_infinite:
            return PadicVal.infinite()
        return PadicVal(self.value * k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return not self.is_infinite and self.value == other
        if not isinstance(other, PadicVal):
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PadicVal(other)
        if self.is_infinite:
            return False
        if other.is_infinite:
            return True
        return self.value < other.value

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        return not self <= other

    def __ge__(self, other):
        return not self < other

    def __hash__(self):
        return hash(self.value)

    def __str__(self) -> str:
        return "inf" if self.is_infinite else str(self.value)

    def __repr__(self) -> str:
        return f"PadicVal({self})"

    @classmethod
    def parse(cls, s: str) -> "PadicVal":
        return cls.infinite() if s == "inf" else cls(Fraction(s))


def rational_valuation(q, p: int) -> PadicVal:
    q = Fraction(q)
    if q == 0:
        return PadicVal.infinite()
    v = 0
    num, den = q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return PadicVal(v)


class PrimeAbovePChoice:
    """Data selecting one prime of every Q(zeta_N) above p, coherently.

    The choice is an irreducible factor of Phi_{N'} mod p per prime-to-p
    conductor N' seen so far; factors for new conductors are required to be
    consistent with those already fixed on every intersection field, so the
    family is a fragment of a single embedding of Qbar into Cbar_p.  The
    `choice_index` selects among the compatible factors whenever there is a
    genuine choice, which is how tests exercise two distinct primes.
    Internal caches are guarded by a lock so instances are shareable.
    """

    def __init__(self, p: int, choice_index: int = 0, start_precision: int = 32, max_precision: int = 4096):
        if p < 3:
            raise ValueError("p must be an odd prime")
        self.p = p
        self.choice_index = choice_index
        self.start_precision = start_precision
        self.max_precision = max_precision
        self._anchors: dict[int, tuple[int, ...]] = {1: tuple(c % p for c in _padic.cyclotomic_poly(1))}
        self._derived: dict[int, tuple[int, ...]] = dict(self._anchors)
        self._tables: dict[tuple[int, int, int], _padic.EvaluationTables] = {}
        self._lock = threading.RLock()

    # -- factor bookkeeping --------------------------------------------------

    def _derive(self, anchor: int, m: int) -> tuple[int, ...]:
        """Factor of Phi_m induced by the anchor's factor, for m | anchor."""
        if m == anchor:
            return self._anchors[anchor]
        got = self._derived.get(m)
        if got is not None:
            return got
        h = self._anchors[anchor]
        out = _padic.min_poly_of_power(list(h), self.p, anchor // m)
        self._derived[m] = out
        return out

    def factor_for(self, nprime: int) -> tuple[int, ...]:
        """The chosen irreducible factor of Phi_{nprime} mod p."""
        with self._lock:
            got = self._derived.get(nprime)
            if got is not None:
                return got
            for a in self._anchors:
                if a % nprime == 0:
                    return self._derive(a, nprime)
            candidates = _padic.factor_cyclotomic_mod_p(nprime, self.p)
            compatible = []
            for cand in candidates:
                ok = True
                for a in list(self._anchors):
                    g = gcd(a, nprime)
                    if g == 1:
                        continue
                    want = self._derive(a, g)
                    have = _padic.min_poly_of_power(list(cand), self.p, nprime // g)
                    if want != have:
                        ok = False
                        break
                if ok:
                    compatible.append(cand)
            if not compatible:
                raise IncompatiblePrimeChoiceError(
                    f"no factor of Phi_{nprime} mod {self.p} refines the primes already chosen"
                )
            pick = compatible[self.choice_index % len(compatible)]
            self._anchors[nprime] = pick
            self._derived[nprime] = pick
            return pick

    def _evaluation_tables(self, nprime: int, a: int, K: int) -> _padic.EvaluationTables:
        with self._lock:
            key = (nprime, a, K)
            got = self._tables.get(key)
            if got is None:
                got = _padic.EvaluationTables(self.p, K, a, nprime, list(self.factor_for(nprime)))
                self._tables[key] = got
            return got

    # -- the valuation --------------------------------------------------------

    def valuation(self, x) -> PadicVal:
        if isinstance(x, ScaledCyclotomic):
            extra = Fraction(1, 2) if x.scale % self.p == 0 else Fraction(0)
            v = self.valuation(x.base)
            return v if v.is_infinite else PadicVal(v.value + extra)
        if isinstance(x, (int, Fraction)):
            return rational_valuation(x, self.p)
        if not isinstance(x, Cyclotomic):
            raise TypeError(f"cannot take valuation of {x!r}")
        x = x.minimized()
        if x.is_zero():
            return PadicVal.infinite()
        if x.is_rational():
            return rational_valuation(x.coeffs[0], self.p)
        n = x.conductor
        a = 0
        while n % self.p == 0:
            n //= self.p
            a += 1
        nprime = n
        den = 1
        for c in x.coeffs:
            den = den * c.denominator // gcd(den, c.denominator)
        terms = [(i, int(c * den)) for i, c in enumerate(x.coeffs) if c]
        shift = rational_valuation(den, self.p).value
        K = self.start_precision
        while K <= self.max_precision:
            tables = self._evaluation_tables(nprime, a, K)
            v = tables.eval_terms(terms)
            if v is not None:
                return PadicVal(v - shift)
            K *= 2
        raise PrecisionError(
            f"valuation not certified within {self.max_precision} digits at p={self.p}; raise max_precision"
        )


def padic_valuation(x, choice: PrimeAbovePChoice) -> PadicVal:
    """Valuation of x at the chosen prime above p, normalized so v(p) = 1."""
    return choice.valuation(x)

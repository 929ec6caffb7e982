"""Quadratic extensions E of Q_ell (ell odd), their additive characters, and
finite quotient enumeration.

The base field is Q (so d_F = 1 and the different bookkeeping collapses);
the extension carries a basis {1, theta} with conj(theta) = -theta, theta a
uniformizer in the ramified case.  delta = 2*theta generates the relative
different and t = theta + conj(theta) = 0; t is still carried as a field so
the formulas keep their general shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .cyclo_exact import Cyclotomic
from .errors import BudgetError

DEFAULT_BUDGET = 10**7


def is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    q = 3
    while q * q <= n:
        if n % q == 0:
            return False
        q += 2
    return True


def legendre(a: int, ell: int) -> int:
    a %= ell
    if a == 0:
        return 0
    return 1 if pow(a, (ell - 1) // 2, ell) == 1 else -1


def smallest_nonresidue(ell: int) -> int:
    for u in range(2, ell):
        if legendre(u, ell) == -1:
            return u
    raise AssertionError("no quadratic nonresidue found")


def ell_valuation(x: Fraction | int, ell: int) -> int | None:
    """Valuation of a rational at ell; None for zero."""
    x = Fraction(x)
    if x == 0:
        return None
    v, num, den = 0, x.numerator, x.denominator
    while num % ell == 0:
        num //= ell
        v += 1
    while den % ell == 0:
        den //= ell
        v -= 1
    return v


def hilbert_symbol_odd(a: Fraction, b: Fraction, ell: int) -> int:
    """(a, b)_ell for an odd prime ell: +1 iff a is a norm from Q_ell(sqrt b)."""
    alpha, beta = ell_valuation(a, ell), ell_valuation(b, ell)
    ua = a / Fraction(ell) ** alpha
    ub = b / Fraction(ell) ** beta
    ra = (ua.numerator * pow(ua.denominator, -1, ell)) % ell
    rb = (ub.numerator * pow(ub.denominator, -1, ell)) % ell
    eps = (-1) ** ((alpha % 2) * (beta % 2) * ((ell - 1) // 2))
    return eps * legendre(ra, ell) ** (beta % 2) * legendre(rb, ell) ** (alpha % 2)


@dataclass(frozen=True)
class LocalQuadExt:
    """E = Q_ell(theta) with theta^2 = theta_sq, conj(theta) = -theta."""

    ell: int
    kind: str  # "inert" | "ramified"
    theta_sq: int

    def __post_init__(self):
        if not is_odd_prime(self.ell):
            raise ValueError(f"residue prime must be an odd prime, got {self.ell}")
        v = ell_valuation(self.theta_sq, self.ell)
        if self.kind == "inert":
            if v != 0 or legendre(self.theta_sq, self.ell) != -1:
                raise ValueError("inert extension needs theta^2 a unit nonsquare")
        elif self.kind == "ramified":
            if v != 1:
                raise ValueError("ramified extension needs v_ell(theta^2) = 1")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def inert(cls, ell: int, theta_sq: int | None = None) -> "LocalQuadExt":
        if theta_sq is None:
            theta_sq = smallest_nonresidue(ell)
        return cls(ell, "inert", theta_sq)

    @classmethod
    def ramified(cls, ell: int, unit: int = 1) -> "LocalQuadExt":
        return cls(ell, "ramified", unit * ell)

    @property
    def e(self) -> int:
        return 1 if self.kind == "inert" else 2

    @property
    def f(self) -> int:
        return 2 if self.kind == "inert" else 1

    @property
    def q(self) -> int:
        """Residue field cardinality of E."""
        return self.ell**self.f

    @property
    def t(self) -> Fraction:
        """theta + conj(theta); zero away from 2, carried for formula shape."""
        return Fraction(0)

    @property
    def d_F(self) -> Fraction:
        return Fraction(1)

    def theta(self) -> "EElement":
        return EElement(self, Fraction(0), Fraction(1))

    def delta(self) -> "EElement":
        """Generator 2*theta of the relative different."""
        return EElement(self, Fraction(0), Fraction(2))

    @property
    def v_delta(self) -> int:
        """v_E(delta): 0 if inert, 1 if ramified (odd ell)."""
        return 0 if self.kind == "inert" else 1

    def uniformizer(self) -> "EElement":
        if self.kind == "inert":
            return EElement(self, Fraction(self.ell), Fraction(0))
        return self.theta()

    def one(self) -> "EElement":
        return EElement(self, Fraction(1), Fraction(0))

    def quadratic_character(self, beta: Fraction | int) -> int:
        """tau_{E/F}(beta): +1 iff beta is a norm from E."""
        beta = Fraction(beta)
        if beta == 0:
            raise ValueError("the quadratic character is defined on nonzero elements")
        if self.kind == "inert":
            return (-1) ** (ell_valuation(beta, self.ell) % 2)
        return hilbert_symbol_odd(beta, Fraction(self.theta_sq), self.ell)

    def residue_shape(self, n: int) -> tuple[int, int]:
        """Moduli (MX, MY) with O_E/p^n = {x + y theta : x mod MX, y mod MY}."""
        if self.kind == "inert":
            return self.ell**n, self.ell**n
        return self.ell ** ((n + 1) // 2), self.ell ** (n // 2)


@dataclass(frozen=True)
class EElement:
    """x + y*theta with exact rational coordinates (ell-power denominators)."""

    ext: LocalQuadExt
    x: Fraction
    y: Fraction

    def __add__(self, other: "EElement") -> "EElement":
        return EElement(self.ext, self.x + other.x, self.y + other.y)

    def __sub__(self, other: "EElement") -> "EElement":
        return EElement(self.ext, self.x - other.x, self.y - other.y)

    def __mul__(self, other) -> "EElement":
        if isinstance(other, (int, Fraction)):
            return EElement(self.ext, self.x * other, self.y * other)
        assert self.ext == other.ext
        t = self.ext.theta_sq
        return EElement(
            self.ext,
            self.x * other.x + self.y * other.y * t,
            self.x * other.y + self.y * other.x,
        )

    __rmul__ = __mul__

    def conj(self) -> "EElement":
        return EElement(self.ext, self.x, -self.y)

    def trace(self) -> Fraction:
        return 2 * self.x

    def norm(self) -> Fraction:
        return self.x * self.x - self.y * self.y * self.ext.theta_sq

    def is_zero(self) -> bool:
        return not self.x and not self.y

    def valuation(self) -> int | None:
        """v_E; exact because {1, theta} splits the valuation (odd ell)."""
        ext = self.ext
        vx = ell_valuation(self.x, ext.ell)
        vy = ell_valuation(self.y, ext.ell)
        parts = []
        if vx is not None:
            parts.append(ext.e * vx)
        if vy is not None:
            parts.append(ext.e * vy + (1 if ext.kind == "ramified" else 0))
        return min(parts) if parts else None

    def inverse(self) -> "EElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverting zero in E")
        return EElement(self.ext, self.x / n, -self.y / n)

    def __truediv__(self, other: "EElement") -> "EElement":
        return self * other.inverse()

    def unit_factorization(self) -> tuple[int, "EElement"]:
        """(m, u) with self = pi_E^m * u and u a unit."""
        m = self.valuation()
        if m is None:
            raise ZeroDivisionError("zero has no unit factorization")
        u = self * self.ext.uniformizer() ** (-m)
        return m, u

    def __pow__(self, k: int) -> "EElement":
        if k < 0:
            return self.inverse() ** (-k)
        out = self.ext.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def residue_key(self, n: int) -> tuple[int, int]:
        """Canonical key of the class mod p_E^n; requires integral coordinates."""
        mx, my = self.ext.residue_shape(n)
        ell = self.ext.ell
        return (_reduce_mod(self.x, mx, ell), _reduce_mod(self.y, my, ell))

    def is_integral(self) -> bool:
        v = self.valuation()
        return v is None or v >= 0

    def __repr__(self) -> str:
        return f"EElement({self.x} + {self.y}*theta; ell={self.ext.ell} {self.ext.kind})"


def _reduce_mod(x: Fraction, modulus: int, ell: int) -> int:
    den = x.denominator
    if gcd(den, ell) != 1:
        raise ValueError("non-integral coordinate cannot be reduced")
    return (x.numerator * pow(den, -1, modulus)) % modulus if modulus > 1 else 0


def fractional_exponent(x: Fraction, ell: int) -> tuple[int, int]:
    """(a, m) with x = a/ell^m mod Z_ell, 0 <= a < ell^m; m = 0 for integral x."""
    v = ell_valuation(x, ell)
    if v is None or v >= 0:
        return 0, 0
    m = -v
    modulus = ell**m
    scaled = x * modulus  # ell-adic unit
    a = (scaled.numerator * pow(scaled.denominator, -1, modulus)) % modulus
    return a, m


def psi_F(ell: int, x: Fraction | int, sign: int = -1) -> Cyclotomic:
    """Additive character of Q_ell: psi(x) = zeta_{ell^m}^{sign*a} for x = a/ell^m mod Z_ell.

    sign=-1 is the finite part of the adelic character trivial on Q with
    e^{2*pi*i*x} at infinity; sign=+1 is the opposite convention.
    """
    a, m = fractional_exponent(Fraction(x), ell)
    if m == 0:
        return Cyclotomic.one()
    return Cyclotomic.root_of_unity(ell**m, sign * a)


def psi_circ(ell: int, x: Fraction | int, sign: int = -1) -> Cyclotomic:
    """psi(-x); the twist by -d_F^{-1} with d_F = 1."""
    return psi_F(ell, -Fraction(x), sign)


def psi_E(ext: LocalQuadExt, z: EElement, sign: int = -1) -> Cyclotomic:
    """Additive character of E: psi composed with the trace."""
    return psi_F(ext.ell, z.trace(), sign)


@lru_cache(maxsize=32)
def _quotient_cache(ext: LocalQuadExt, n: int, budget: int):
    size = ext.q**n
    if size > budget:
        raise BudgetError(f"|O_E/p^{n}| = {size} exceeds budget {budget}")
    mx, my = ext.residue_shape(n)
    reps, units = [], []
    for xv in range(mx):
        for yv in range(my):
            elt = EElement(ext, Fraction(xv), Fraction(yv))
            reps.append(elt)
            if ext.kind == "inert":
                if xv % ext.ell or yv % ext.ell:
                    units.append(elt)
            else:
                if xv % ext.ell:
                    units.append(elt)
    assert len(reps) == size
    return tuple(reps), tuple(units)


def enumerate_quotient(ext: LocalQuadExt, n: int, budget: int = DEFAULT_BUDGET):
    """Representatives of O_E/p^n and of its unit group, in canonical order."""
    assert n >= 1
    reps, units = _quotient_cache(ext, n, budget)
    return list(reps), list(units)

"""Finite-order characters of E^x and of Q_ell^x.

Characters of E^x are specified on a diagonalized presentation of the finite
unit quotient (O_E/p^n)^x together with a value on the uniformizer; values
are exponents in Q/Z, so everything stays exact.  The module also solves the
self-duality restriction (restriction to F^x equals the quadratic character
of E/F), enumerates all self-dual characters up to a conductor bound, and
computes the local invariant inf_x v_p(chi(x) - 1).
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, prod

from array import array

from .cyclo_exact import (
    Cyclotomic,
    PadicVal,
    PrimeAbovePChoice,
    ScaledCyclotomic,
    half_integral_power,
)
from .errors import BudgetError
from .local_field import (
    DEFAULT_BUDGET,
    EElement,
    LocalQuadExt,
    ell_valuation,
    enumerate_quotient,
)

__all__ = [
    "UnitGroupPresentation",
    "MultChar",
    "ArithChar",
    "FCharacter",
    "build_presentation",
    "conductor",
    "is_self_dual",
    "restrict_to_F",
    "enumerate_self_dual",
    "mu_p_local",
    "primitive_root",
    "tau_exponents",
]


def _frac_mod1(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def primitive_root(ell: int, level: int = 1) -> int:
    """Smallest generator of (Z/ell^level)^x for odd ell."""
    for r in range(2, ell * ell):
        ok = True
        x, k = r % ell, 1
        while x != 1:
            x = (x * r) % ell
            k += 1
        if k != ell - 1:
            ok = False
        if ok and level > 1 and pow(r, ell - 1, ell * ell) == 1:
            ok = False
        if ok:
            return r
    raise AssertionError("no primitive root found")


def _element_order(g, mul, one):
    k, x = 1, g
    while x != one:
        x = mul(x, g)
        k += 1
    return k


def _abelian_basis(elems, mul, one):
    """Invariant-factor generators [(g, order)] of a finite abelian group.

    The element of maximal order generates a direct summand; recurse on the
    quotient by its span and lift the quotient generators, correcting each
    lift by a power of the summand generator so its order is preserved.
    """
    if len(elems) == 1:
        return []
    orders = {g: _element_order(g, mul, one) for g in elems}
    d1 = max(orders.values())
    g1 = min(g for g, d in orders.items() if d == d1)
    powers = [one]
    for _ in range(d1 - 1):
        powers.append(mul(powers[-1], g1))
    dlog_g1 = {x: i for i, x in enumerate(powers)}
    rep_of = {}
    for x in elems:
        if x in rep_of:
            continue
        orbit = [mul(x, t) for t in powers]
        r = min(orbit)
        for y in orbit:
            rep_of[y] = r
    quotient = sorted(set(rep_of.values()))
    qmul = lambda a, b: rep_of[mul(a, b)]
    out = [(g1, d1)]
    for hbar, dbar in _abelian_basis(quotient, qmul, rep_of[one]):
        h = hbar
        z = one
        for _ in range(dbar):
            z = mul(z, h)
        c = dlog_g1[z]
        assert c % dbar == 0, "maximal order must be the group exponent"
        h = mul(h, powers[(-(c // dbar)) % d1])
        out.append((h, dbar))
    return out


_PRES_CACHE: dict[tuple, "UnitGroupPresentation"] = {}
_PRES_LOCK = threading.Lock()


@dataclass(frozen=True, eq=False)
class UnitGroupPresentation:
    """Diagonalized presentation of (O_E/p^n)^x with a full discrete-log table."""

    ext: LocalQuadExt
    level: int
    generators: tuple[EElement, ...]
    orders: tuple[int, ...]
    _dlog: dict
    _shape: tuple[int, int]

    @classmethod
    def build(cls, ext: LocalQuadExt, level: int, budget: int = DEFAULT_BUDGET) -> "UnitGroupPresentation":
        key = (ext.ell, ext.kind, ext.theta_sq, level)
        with _PRES_LOCK:
            got = _PRES_CACHE.get(key)
        if got is not None:
            return got
        assert level >= 1
        _, units = enumerate_quotient(ext, level, budget)
        mx, my = ext.residue_shape(level)
        keys = sorted(u.residue_key(level) for u in units)

        def mul(a, b):
            x = (a[0] * b[0] + a[1] * b[1] * ext.theta_sq) % mx
            y = (a[0] * b[1] + a[1] * b[0]) % my
            return (x, y)

        one = (1 % mx, 0)
        basis = _abelian_basis(keys, mul, one)
        gens = tuple(EElement(ext, Fraction(g[0]), Fraction(g[1])) for g, _ in basis)
        orders = tuple(d for _, d in basis)
        # discrete logs by enumerating all power products; certifies the basis
        dlog = {one: (0,) * len(basis)}
        items = [(one, (0,) * len(basis))]
        for idx, (g, d) in enumerate(basis):
            new_items = []
            for elt, exps in items:
                cur = elt
                for k in range(1, d):
                    cur = mul(cur, g)
                    e2 = exps[:idx] + (k,) + exps[idx + 1 :]
                    new_items.append((cur, e2))
            items.extend(new_items)
            for elt, exps in new_items:
                assert elt not in dlog, "presentation is not a direct sum"
                dlog[elt] = exps
        assert len(dlog) == len(units), "power products must exhaust the unit group"
        pres = cls(ext, level, gens, orders, dlog, (mx, my))
        with _PRES_LOCK:
            _PRES_CACHE.setdefault(key, pres)
            return _PRES_CACHE[key]

    @property
    def group_order(self) -> int:
        return prod(self.orders) if self.orders else 1

    def dlog(self, u: EElement) -> tuple[int, ...]:
        return self._dlog[u.residue_key(self.level)]

    def dlog_key(self, key: tuple[int, int]) -> tuple[int, ...]:
        return self._dlog[key]

    def key_count(self) -> int:
        mx, my = self._shape
        return mx * my

    def dlog_flat_array(self) -> array:
        """Flat int32 dlog table indexed by kx*my + ky; -1 marks non-units."""
        cached = getattr(self, "_flat", None)
        if cached is not None:
            return cached
        mx, my = self._shape
        ngens = max(len(self.generators), 1)
        flat = array("i", [-1] * (mx * my * ngens))
        for (kx, ky), exps in self._dlog.items():
            base = (kx * my + ky) * ngens
            if not self.generators:
                flat[base] = 0
            for g, e in enumerate(exps):
                flat[base + g] = e
        object.__setattr__(self, "_flat", flat)
        return flat

    def power_product(self, exps) -> EElement:
        out = self.ext.one()
        for g, e in zip(self.generators, exps):
            out = out * g**int(e)
        return out

    def verify(self, samples: int = 100, seed: int = 0) -> None:
        """Random product/log consistency checks."""
        import random

        rng = random.Random(seed)
        keys = list(self._dlog)
        mx, my = self._shape
        for _ in range(samples):
            a = rng.choice(keys)
            b = rng.choice(keys)
            ea, eb = self._dlog[a], self._dlog[b]
            x = (a[0] * b[0] + a[1] * b[1] * self.ext.theta_sq) % mx
            y = (a[0] * b[1] + a[1] * b[0]) % my
            expected = tuple((i + j) % d for i, j, d in zip(ea, eb, self.orders))
            assert self._dlog[(x, y)] == expected


def build_presentation(ext: LocalQuadExt, level: int, budget: int = DEFAULT_BUDGET) -> UnitGroupPresentation:
    pres = UnitGroupPresentation.build(ext, level, budget)
    pres.verify()
    return pres


@dataclass(frozen=True, eq=False)
class MultChar:
    """Finite-order character of E^x: exponents in Q/Z on the presentation
    generators plus an exponent on the uniformizer."""

    pres: UnitGroupPresentation
    unit_exponents: tuple[Fraction, ...]
    pi_exponent: Fraction

    def __post_init__(self):
        assert len(self.unit_exponents) == len(self.pres.generators)
        for c, d in zip(self.unit_exponents, self.pres.orders):
            assert (_frac_mod1(c * d)).numerator == 0, "exponent must respect the generator order"
        object.__setattr__(self, "unit_exponents", tuple(_frac_mod1(c) for c in self.unit_exponents))
        object.__setattr__(self, "pi_exponent", _frac_mod1(self.pi_exponent))

    @property
    def ext(self) -> LocalQuadExt:
        return self.pres.ext

    @property
    def order(self) -> int:
        dens = [c.denominator for c in self.unit_exponents] + [self.pi_exponent.denominator]
        out = 1
        for d in dens:
            out = out * d // gcd(out, d)
        return out

    def value_exponent(self, x) -> Fraction:
        """chi(x) = e^{2 pi i * exponent}; x in E^x (EElement or rational)."""
        if isinstance(x, (int, Fraction)):
            x = EElement(self.ext, Fraction(x), Fraction(0))
        m, u = x.unit_factorization()
        exps = self.pres.dlog(u)
        total = m * self.pi_exponent
        for e, c in zip(exps, self.unit_exponents):
            total += e * c
        return _frac_mod1(total)

    def __call__(self, x) -> Cyclotomic:
        e = self.value_exponent(x)
        return Cyclotomic.root_of_unity(e.denominator, e.numerator)

    def inverse(self) -> "MultChar":
        return MultChar(self.pres, tuple(-c for c in self.unit_exponents), -self.pi_exponent)

    def is_unit_trivial(self) -> bool:
        return all(not c for c in self.unit_exponents)

    def conductor(self) -> int:
        got = getattr(self, "_cond", None)
        if got is None:
            got = conductor(self)
            object.__setattr__(self, "_cond", got)
        return got

    # serialization: the presentation is reproducible from (prime, kind,
    # theta_square, level) because the basis algorithm is deterministic
    def to_json(self) -> dict:
        return {
            "prime": self.ext.ell,
            "kind": self.ext.kind,
            "theta_square": self.ext.theta_sq,
            "level": self.pres.level,
            "generator_exponents": [str(c) for c in self.unit_exponents],
            "uniformizer_exponent": str(self.pi_exponent),
            "norm_exponent": "0",
        }

    @classmethod
    def from_json(cls, data: dict, budget: int = DEFAULT_BUDGET) -> "MultChar":
        ext = LocalQuadExt(data["prime"], data["kind"], data["theta_square"])
        pres = UnitGroupPresentation.build(ext, data["level"], budget)
        exps = tuple(Fraction(s) for s in data["generator_exponents"])
        return cls(pres, exps, Fraction(data["uniformizer_exponent"]))


@dataclass(frozen=True, eq=False)
class ArithChar:
    """finite_part times |.|_E^{norm_exponent}; houses chi_v = chi*_v |.|^{1/2}."""

    finite_part: MultChar
    norm_exponent: Fraction = Fraction(1, 2)

    @property
    def ext(self) -> LocalQuadExt:
        return self.finite_part.ext

    def value(self, x) -> ScaledCyclotomic:
        if isinstance(x, (int, Fraction)):
            x = EElement(self.ext, Fraction(x), Fraction(0))
        m = x.valuation()
        root = self.finite_part(x)
        # |x|_E^{s0} = q_E^{-s0 m}
        scale = half_integral_power(self.ext.q, -self.norm_exponent * m)
        return scale * root

    __call__ = value

    def value_parts(self, x) -> tuple[Fraction, Fraction]:
        """(root-of-unity exponent, exponent of ell in the modulus part)."""
        if isinstance(x, (int, Fraction)):
            x = EElement(self.ext, Fraction(x), Fraction(0))
        m = x.valuation()
        return self.finite_part.value_exponent(x), -self.norm_exponent * m * self.ext.f

    def inverse(self) -> "ArithChar":
        return ArithChar(self.finite_part.inverse(), -self.norm_exponent)

    def is_trivial(self) -> bool:
        return self.finite_part.is_unit_trivial() and not self.finite_part.pi_exponent and not self.norm_exponent

    def to_json(self) -> dict:
        out = self.finite_part.to_json()
        out["norm_exponent"] = str(self.norm_exponent)
        return out

    @classmethod
    def from_json(cls, data: dict, budget: int = DEFAULT_BUDGET) -> "ArithChar":
        return cls(MultChar.from_json(data, budget), Fraction(data.get("norm_exponent", "1/2")))


def _filtration_reps(ext: LocalQuadExt, m: int, n: int):
    """Representatives of p^m / p^n as EElements (m >= 1)."""
    lx, ly = ext.residue_shape(n)
    if ext.kind == "inert":
        cm = fm = ext.ell**m
    else:
        cm, fm = ext.ell ** ((m + 1) // 2), ext.ell ** (m // 2)
    out = []
    for a in range(lx // cm):
        for b in range(ly // fm):
            out.append(EElement(ext, Fraction(a * cm), Fraction(b * fm)))
    return out


def conductor(chi: MultChar) -> int:
    """Smallest n >= 0 with chi trivial on (1 + p^n) intersect O_E^x."""
    pres = chi.pres
    ext = pres.ext
    n = pres.level
    if chi.is_unit_trivial():
        return 0
    for m in range(1, n + 1):
        trivial = True
        for z in _filtration_reps(ext, m, n):
            u = ext.one() + z
            if chi.value_exponent(u):
                trivial = False
                break
        if trivial:
            return m
    raise AssertionError("character not well-defined at its level")


def tau_exponents(ext: LocalQuadExt, level: int) -> tuple[int, Fraction, Fraction]:
    """(F-unit generator r, tau-exponent at r, tau-exponent at ell).

    tau is the quadratic character of F^x attached to E/F; exponents are in
    {0, 1/2} with value e^{2 pi i exp}.
    """
    n_f = (level + ext.e - 1) // ext.e
    r = primitive_root(ext.ell, max(n_f, 1))
    tau_r = Fraction(0) if ext.quadratic_character(r) == 1 else Fraction(1, 2)
    tau_ell = Fraction(0) if ext.quadratic_character(ext.ell) == 1 else Fraction(1, 2)
    return r, tau_r, tau_ell


def is_self_dual(chi: MultChar) -> bool:
    """chi restricted to F^x equals the quadratic character of E/F."""
    r, tau_r, tau_ell = tau_exponents(chi.ext, chi.pres.level)
    return chi.value_exponent(Fraction(r)) == tau_r and chi.value_exponent(Fraction(chi.ext.ell)) == tau_ell


def restrict_to_F(chi: MultChar) -> "FCharacter":
    """The character of F^x = Q_ell^x obtained by restriction."""
    ext = chi.ext
    n_f = max((chi.pres.level + ext.e - 1) // ext.e, 1)
    r = primitive_root(ext.ell, n_f)
    return FCharacter(
        ell=ext.ell,
        level=n_f,
        unit_exponent=chi.value_exponent(Fraction(r)),
        pi_exponent=chi.value_exponent(Fraction(ext.ell)),
        norm_exponent=Fraction(0),
    )


def enumerate_self_dual(ext: LocalQuadExt, max_conductor: int, budget: int = DEFAULT_BUDGET) -> list[MultChar]:
    """All finite-order characters of E^x with conductor <= max_conductor whose
    restriction to F^x is the quadratic character of E/F."""
    if max_conductor == 0:
        if ext.kind == "inert":
            pres = UnitGroupPresentation.build(ext, 1, budget)
            return [MultChar(pres, (Fraction(0),) * len(pres.generators), Fraction(1, 2))]
        return []
    level = max_conductor
    pres = UnitGroupPresentation.build(ext, level, budget)
    if pres.group_order > budget:
        raise BudgetError(f"unit group of size {pres.group_order} exceeds budget")
    r, tau_r, tau_ell = tau_exponents(ext, level)
    r_exps = pres.dlog(EElement(ext, Fraction(r), Fraction(0)))
    out = []
    # walk the exponent lattice; the restriction condition is one congruence
    # for the F-units plus the uniformizer matching below
    def lattice(idx, acc):
        if idx == len(pres.orders):
            yield tuple(acc)
            return
        d = pres.orders[idx]
        for k in range(d):
            acc.append(Fraction(k, d))
            yield from lattice(idx + 1, acc)
            acc.pop()

    u0 = Fraction(ext.theta_sq, ext.ell) if ext.kind == "ramified" else None
    for exps in lattice(0, []):
        val_r = _frac_mod1(sum((e * c for e, c in zip(r_exps, exps)), Fraction(0)))
        if val_r != tau_r:
            continue
        if ext.kind == "inert":
            pis = [Fraction(1, 2)]
        else:
            # chi(theta)^2 = chi(theta^2) = chi(u0) * chi(ell)
            u0_exps = pres.dlog(EElement(ext, Fraction(u0), Fraction(0)))
            val_u0 = _frac_mod1(sum((e * c for e, c in zip(u0_exps, exps)), Fraction(0)))
            base = _frac_mod1(val_u0 + tau_ell)
            pis = [base / 2, _frac_mod1(base / 2 + Fraction(1, 2))]
        for pi_exp in pis:
            chi = MultChar(pres, exps, pi_exp)
            if chi.conductor() <= max_conductor:
                out.append(chi)
    out.sort(key=lambda c: (c.unit_exponents, c.pi_exponent))
    for chi in out:
        assert is_self_dual(chi)
    return out


_FDLOG_CACHE: dict[tuple[int, int], dict[int, int]] = {}
_FDLOG_LOCK = threading.Lock()


def _f_dlog_table(ell: int, level: int) -> dict[int, int]:
    with _FDLOG_LOCK:
        got = _FDLOG_CACHE.get((ell, level))
    if got is None:
        r = primitive_root(ell, level)
        mod = ell**level
        got = {}
        x, k = 1, 0
        phi = (ell - 1) * ell ** (level - 1)
        while k < phi:
            got[x] = k
            x = (x * r) % mod
            k += 1
        with _FDLOG_LOCK:
            _FDLOG_CACHE[(ell, level)] = got
    return got


@dataclass(frozen=True)
class FCharacter:
    """Character of Q_ell^x: unit part on the fixed generator of (Z/ell^level)^x,
    a value exponent on ell, and a |.|^{norm_exponent} twist."""

    ell: int
    level: int
    unit_exponent: Fraction
    pi_exponent: Fraction
    norm_exponent: Fraction = Fraction(0)

    def __post_init__(self):
        phi = (self.ell - 1) * self.ell ** (self.level - 1) if self.level else 1
        assert (_frac_mod1(self.unit_exponent * phi)).numerator == 0
        object.__setattr__(self, "unit_exponent", _frac_mod1(self.unit_exponent))
        object.__setattr__(self, "pi_exponent", _frac_mod1(self.pi_exponent))

    def root_exponent(self, x) -> Fraction:
        """Exponent of the finite-order part at x."""
        x = Fraction(x)
        m = ell_valuation(x, self.ell)
        if m is None:
            raise ZeroDivisionError("character of zero")
        total = m * self.pi_exponent
        if self.level >= 1 and self.unit_exponent:
            mod = self.ell**self.level
            u = x / Fraction(self.ell) ** m
            res = (u.numerator * pow(u.denominator, -1, mod)) % mod
            total += _f_dlog_table(self.ell, self.level)[res] * self.unit_exponent
        return _frac_mod1(total)

    def value(self, x) -> ScaledCyclotomic:
        x = Fraction(x)
        m = ell_valuation(x, self.ell)
        e = self.root_exponent(x)
        root = Cyclotomic.root_of_unity(e.denominator, e.numerator)
        return half_integral_power(self.ell, -self.norm_exponent * m) * root

    __call__ = value

    def inverse(self) -> "FCharacter":
        return FCharacter(self.ell, self.level, -self.unit_exponent, -self.pi_exponent, -self.norm_exponent)

    def conductor(self) -> int:
        if not self.unit_exponent:
            return 0
        # smallest k with triviality on 1 + ell^k Z_ell
        table = _f_dlog_table(self.ell, self.level)
        for k in range(1, self.level + 1):
            mod = self.ell**self.level
            trivial = all(
                not _frac_mod1(table[(1 + self.ell**k * j) % mod] * self.unit_exponent)
                for j in range(self.ell ** (self.level - k))
            )
            if trivial:
                return k
        raise AssertionError("unit exponent inconsistent with level")

    def is_unramified(self) -> bool:
        return self.conductor() == 0

    def value_on_uniformizer(self) -> ScaledCyclotomic:
        return self.value(Fraction(self.ell))

    def to_json(self) -> dict:
        return {
            "prime": self.ell,
            "level": self.level,
            "unit_exponent": str(self.unit_exponent),
            "uniformizer_exponent": str(self.pi_exponent),
            "norm_exponent": str(self.norm_exponent),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FCharacter":
        return cls(
            data["prime"],
            data["level"],
            Fraction(data["unit_exponent"]),
            Fraction(data["uniformizer_exponent"]),
            Fraction(data.get("norm_exponent", "0")),
        )


def mu_p_local(
    chi_v: ArithChar,
    choice: PrimeAbovePChoice,
    max_cap: int = 64,
    window_budget: int = 200_000,
) -> PadicVal:
    """inf over x in E^x of v_p(chi_v(x) - 1).

    The value set is the subgroup generated by the unit-part values (a finite
    cyclic group of roots of unity) and A = chi_v(pi_E).  Valuations of
    zeta * A^m - 1 are periodic in m with period the multiplicative order T
    of A modulo p-valuation >= K, up to values >= K; so the minimum over one
    window [0, T) is the infimum once it is < K, and K escalates otherwise.
    """
    ext = chi_v.ext
    p = choice.p
    if p == ext.ell:
        raise ValueError("the residue prime and p must differ")
    # unit-part value group: cyclic of order d'
    d_unit = 1
    num_g = 0
    for c in chi_v.finite_part.unit_exponents:
        d_unit = d_unit * c.denominator // gcd(d_unit, c.denominator)
    for c in chi_v.finite_part.unit_exponents:
        num_g = gcd(num_g, c.numerator * (d_unit // c.denominator))
    d_prime = d_unit // gcd(num_g, d_unit) if num_g else 1
    r_a = chi_v.finite_part.pi_exponent
    mod_exp = -chi_v.norm_exponent * ext.f  # A's modulus part is ell^{mod_exp}

    def value(j: int, m: int) -> ScaledCyclotomic:
        root = _frac_mod1(Fraction(j, d_prime) + m * r_a)
        zeta = Cyclotomic.root_of_unity(root.denominator, root.numerator)
        return half_integral_power(ext.ell, mod_exp * m) * zeta

    if d_prime == 1 and value(0, 1) == 1:
        warnings.warn("trivial character: the local invariant is infinite")
        return PadicVal.infinite()

    cap = 2
    while cap <= max_cap:
        # period: least T with v_p(A^T - 1) >= cap
        T = None
        t = 1
        while t <= window_budget:
            w = value(0, t) - 1
            if w.is_zero() or choice.valuation(w) >= cap:
                T = t
                break
            t += 1
        if T is None:
            raise BudgetError("period search exceeded the window budget")
        if T * d_prime > window_budget:
            raise BudgetError("value window exceeds the window budget")
        best = PadicVal.infinite()
        seen = set()
        for m in range(T):
            for j in range(d_prime):
                root = _frac_mod1(Fraction(j, d_prime) + m * r_a)
                key = (root, mod_exp * m)
                if key in seen:
                    continue
                seen.add(key)
                w = value(j, m) - 1
                v = PadicVal.infinite() if w.is_zero() else choice.valuation(w)
                if v < best:
                    best = v
        if best.is_infinite:
            warnings.warn("trivial character: the local invariant is infinite")
            return best
        if best < cap:
            return best
        cap *= 2
    raise BudgetError("local invariant exceeded the valuation cap")

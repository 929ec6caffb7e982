"""Partial Gauss sums, epsilon factors, root numbers, and the sign identity
relating them.

The partial Gauss sum here is the integral over F of chi^{-1}(x + theta) times
an additive character psi(-beta x), computed exactly as a finite sum: the
integral is supported on finitely many valuation shells, and on each shell the
integrand is constant on cosets of a computable modulus.  Shell enumeration is
delegated to the accelerated kernels; values are assembled in exact cyclotomic
arithmetic.

The epsilon factor follows the classical integral definition over c^{-1}O_L^x
with c = d_L pi^{a(mu)} and the self-dual Haar measure; for unramified mu the
standard convention epsilon = mu(d_L)|d_L|^s applies.  The root number is the
epsilon factor at s = 1/2.
"""

from __future__ import annotations

import threading
from array import array
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd

from . import _accel
from .characters import ArithChar, FCharacter, MultChar, restrict_to_F
from .cyclo_exact import (
    Cyclotomic,
    PadicVal,
    PrimeAbovePChoice,
    ScaledCyclotomic,
    half_integral_power,
)
from .errors import BudgetError, WitnessNotFoundError
from .local_field import (
    DEFAULT_BUDGET,
    EElement,
    LocalQuadExt,
    ell_valuation,
    enumerate_quotient,
    psi_circ,
    psi_F,
)

__all__ = [
    "GaussSumResult",
    "DichotomyVerdict",
    "tau_quadratic",
    "gauss_support_bound",
    "partial_gauss_sum",
    "partial_gauss_sum_closed_form",
    "epsilon_factor",
    "root_number",
    "dichotomy_check",
    "residue_fourier_coefficients",
    "find_witness",
    "local_l_factor",
]


def tau_quadratic(ext: LocalQuadExt, beta) -> int:
    """The quadratic character of F^x attached to E/F (+1 on norms)."""
    return ext.quadratic_character(beta)


@dataclass(frozen=True)
class GaussSumResult:
    value: ScaledCyclotomic
    method: str  # "brute" | "closed_form"
    truncation: int
    beta: Fraction
    valuation: PadicVal | None = None

    def with_valuation(self, choice: PrimeAbovePChoice) -> "GaussSumResult":
        return replace(self, valuation=choice.valuation(self.value))


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _value_table(pres, exponents: tuple[Fraction, ...]):
    """Kernel table of unit-character exponents scaled to a common order."""
    cache = getattr(pres, "_value_tables", None)
    if cache is None:
        cache = {}
        object.__setattr__(pres, "_value_tables", cache)
    got = cache.get(exponents)
    if got is not None:
        return got
    order = 1
    for c in exponents:
        order = _lcm(order, c.denominator)
    nums = array("q", [int(c * order) % order for c in exponents] or [0])
    ngens = max(len(pres.generators), 1)
    mx, my = pres._shape
    table = _accel.build_value_table(pres.dlog_flat_array(), mx * my, ngens, nums, order)
    cache[exponents] = (table, order)
    return table, order


_BUFFERS = threading.local()


def _acquire_buffers(size: int):
    pool = getattr(_BUFFERS, "pool", None)
    if pool is None:
        pool = _BUFFERS.pool = {}
    got = pool.pop(size, None)
    if got is None:
        got = (array("q", bytes(8 * size)), array("q", bytes(8 * size)))
    return got


def _release_buffers(size: int, buffers) -> None:
    _BUFFERS.pool[size] = buffers


def _psi_block_sum_is_zero(ell: int, pmod: int, terms: dict[int, int]) -> bool:
    """Zero test in Q(zeta_{pmod}) for pmod = ell^m: the only relation is that
    the ell exponents of each ell^{m-1}-strided block carry equal weight."""
    if pmod == 1:
        return not terms.get(0, 0)
    step = pmod // ell
    seen: dict[int, int] = {}
    for k in terms:
        seen.setdefault(k % step, 0)
    for r in seen:
        first = terms.get(r, 0)
        for t in range(1, ell):
            if terms.get(r + t * step, 0) != first:
                return False
    return True


class _ShellAccumulator:
    """Tallies (character exponent, additive exponent) pairs and assembles the
    exact cyclotomic value of one constant-weight pass.

    Assembly collapses the additive sum per character exponent first: each one
    lives in a prime-power cyclotomic field with a constant-time zero test, and
    shells whose additive level exceeds the character's discrimination level
    die there without ever touching a large compositum.
    """

    def __init__(self, table, order: int, ell: int, pmod: int, budget: int):
        if order * pmod > budget:
            raise BudgetError(f"accumulator of size {order * pmod} exceeds budget")
        self.table = table
        self.order = order
        self.ell = ell
        self.pmod = pmod
        self.size = order * pmod
        self.counts, self.touched = _acquire_buffers(self.size)
        self.n_touched = 0

    def sweep(self, shape, affine, count: int, k0: int, k1: int):
        mx, my = shape
        a1, b1, a2, b2 = affine
        self.n_touched = _accel.accumulate_affine(
            self.counts,
            self.touched,
            self.table,
            mx,
            my,
            a1 % mx,
            b1 % mx,
            a2 % my,
            b2 % my,
            count,
            k0 % self.pmod,
            k1 % self.pmod,
            self.pmod,
            self.n_touched,
        )

    def value(self) -> Cyclotomic:
        per_j: dict[int, dict[int, int]] = {}
        counts, pmod = self.counts, self.pmod
        for idx in self.touched[: self.n_touched]:
            c = counts[idx]
            counts[idx] = 0  # leave the buffer clean for reuse
            if not c:
                continue
            j, k = divmod(idx, pmod)
            per_j.setdefault(j, {})[k] = c
        _release_buffers(self.size, (self.counts, self.touched))
        survivors = {j: terms for j, terms in per_j.items() if not _psi_block_sum_is_zero(self.ell, pmod, terms)}
        if not survivors:
            return Cyclotomic.zero()
        # merge everything at the compositum once; survivors keep it small
        big = _lcm(self.order, pmod)
        sj, sk = big // self.order, big // pmod
        merged: dict[int, int] = {}
        for j, terms in survivors.items():
            base = j * sj
            for k, c in terms.items():
                e = (base + k * sk) % big
                merged[e] = merged.get(e, 0) + c
        return Cyclotomic.from_terms(big, merged)


def _psi_slope(beta: Fraction, ell: int, n: int, psi_sign: int) -> tuple[int, int]:
    """(P, K1) with psi_circ(beta * ell^{-n} * i) = zeta_P^{K1 * i}."""
    if beta == 0:
        return 1, 0
    vb = ell_valuation(beta, ell)
    m = max(0, n - vb)
    if m == 0:
        return 1, 0
    P = ell**m
    unit = beta / Fraction(ell) ** vb
    t = (unit.numerator * pow(unit.denominator, -1, P)) % P
    t = (t * pow(ell, vb - n + m, P)) % P
    return P, (-psi_sign * t) % P


def gauss_support_bound(chi_v: ArithChar, beta: Fraction) -> int:
    """Provable outer support exponent of the partial Gauss sum integrand.

    Shells below the conductor-driven depth must always be summed; reduced
    shells vanish by orthogonality beyond v(beta) + max(1, conductor of the
    restriction to F).
    """
    beta = Fraction(beta)
    ext = chi_v.ext
    a = chi_v.finite_part.conductor()
    n_red = max(1, -((-(a - ext.v_delta)) // ext.e))  # ceil((a - v_delta)/e), at least 1
    candidates = [n_red - 1, 0]
    if beta:
        eta_cond = restrict_to_F(chi_v.finite_part).conductor()
        vb = ell_valuation(beta, ext.ell)
        candidates.append(vb + eta_cond if eta_cond >= 1 else vb + 1)
    return max(candidates)


def partial_gauss_sum(
    chi_v: ArithChar,
    beta: Fraction | int,
    truncation: int | None = None,
    psi_sign: int = -1,
    budget: int = DEFAULT_BUDGET,
) -> GaussSumResult:
    """Exact value of the beta-th partial Gauss sum of chi_v.

    The integrand decays like |x|^{-1} (through the norm twist), the tail
    shells vanish by character orthogonality, and each shell is a finite sum
    over cosets; the default truncation is the provable support bound, so
    recomputing at truncation+1 returns the identical value.
    """
    beta = Fraction(beta)
    ext = chi_v.ext
    ell = ext.ell
    lam = chi_v.inverse()  # the integrand character
    a = chi_v.finite_part.conductor()
    if beta == 0 and restrict_to_F(chi_v.finite_part).conductor() == 0:
        raise ValueError("the integral diverges: beta = 0 needs a ramified restriction")
    if beta == 0 and a == 0:
        raise ValueError("need a ramified character or nonzero beta")
    e, v_delta = ext.e, ext.v_delta
    vb = ell_valuation(beta, ell) if beta else None
    M = gauss_support_bound(chi_v, beta) if truncation is None else truncation

    pres = lam.finite_part.pres
    shape = pres._shape
    table, order = _value_table(pres, lam.finite_part.unit_exponents)
    theta = ext.theta()
    total = ScaledCyclotomic.zero()
    spent = 0
    for n in range(M + 1):
        if n == 0:
            k = max(-((-(a + v_delta)) // e), 1)
            if beta and vb < 0:
                k = max(k, -vb)
        else:
            k = max(-((-a) // e), n - (vb if beta else 0), 1)
        count = ell**k
        spent += count
        if spent > budget:
            raise BudgetError("gauss sum enumeration exceeds budget")
        P, K1 = _psi_slope(beta, ell, n, psi_sign)
        acc = _ShellAccumulator(table, order, ell, P, budget)
        # weight: q^{n-k} * lam(pi_F^{-n}); the lam value carries the norm-twist part
        pref = ScaledCyclotomic.from_rational(Fraction(ell**n, ell**k))
        if n:
            pref = pref * lam.value(Fraction(1, ell**n))
        # main pass: z = i + ell^n * theta over the shell (kernel skips non-units)
        acc.sweep(shape, (0, 1, ell**n, 0), count, 0, K1)
        total = total + pref * acc.value()
        if n == 0 and ext.kind == "ramified":
            # x = ell*i' lands at z = theta * (1 + i'/u0 * theta): one deeper pass
            u0 = ext.theta_sq // ell
            accB = _ShellAccumulator(table, order, ell, P, budget)
            u0inv = pow(u0, -1, shape[1]) if shape[1] > 1 else 0
            accB.sweep(shape, (1, 0, 0, u0inv), ell ** (k - 1), 0, (K1 * ell) % P)
            total = total + pref * lam.value(theta) * accB.value()
    return GaussSumResult(value=total, method="brute", truncation=M, beta=beta)


def partial_gauss_sum_closed_form(
    chi_v: ArithChar,
    beta: Fraction | int,
    psi_sign: int = -1,
) -> GaussSumResult:
    """Case-split closed form, valid for inert E, conductor one, self-dual chi*."""
    from .characters import is_self_dual

    beta = Fraction(beta)
    ext = chi_v.ext
    if ext.kind != "inert" or chi_v.finite_part.conductor() != 1 or not is_self_dual(chi_v.finite_part):
        raise ValueError("closed form requires an inert self-dual character of conductor one")
    if beta == 0:
        raise ValueError("beta must be nonzero")
    ell = ext.ell
    vb = ell_valuation(beta, ell)
    psi_factor = psi_circ(ell, ext.t * beta / 2, psi_sign)  # trivial away from 2, kept for shape
    if vb < -1 or (vb >= 0 and vb % 2 == 0):
        value = ScaledCyclotomic.zero()
    elif vb >= 0:
        v2 = 0  # v_ell(2) for odd ell
        value = ScaledCyclotomic(psi_factor * Fraction((-1) ** (v2 + 1)) * (1 + Fraction(1, ell)))
    else:
        theta = ext.theta()
        inv = chi_v.finite_part.inverse()
        s = Cyclotomic.zero()
        for x in range(ell):
            s = s + inv(EElement(ext, Fraction(x), Fraction(0)) + theta) * psi_circ(ell, beta * x, psi_sign)
        value = ScaledCyclotomic(psi_factor * s * Fraction(1, ell))
    return GaussSumResult(value=value, method="closed_form", truncation=0, beta=beta)


def _different_data(mu) -> tuple[int, int, int]:
    """(q_L, d = v_L(d_L), ell) for the field mu lives on."""
    if isinstance(mu, MultChar):
        ext = mu.ext
        return ext.q, (0 if ext.kind == "inert" else 1), ext.ell
    if isinstance(mu, FCharacter):
        return mu.ell, 0, mu.ell
    raise TypeError(f"unsupported character {mu!r}")


def epsilon_factor(mu, s: Fraction, psi_sign: int = -1, budget: int = DEFAULT_BUDGET) -> ScaledCyclotomic:
    """Tate's local constant at s, for a character of E^x or of Q_ell^x.

    Uses the additive character fixed by psi_sign (composed with the trace on
    E) and the Haar measure self-dual for it; the different generator is 1 on
    Q_ell and 2*theta on E.
    """
    s = Fraction(s)
    q_l, d, ell = _different_data(mu)
    a = mu.conductor()
    if a == 0:
        if isinstance(mu, MultChar):
            d_gen = mu.ext.delta()
            root = mu(d_gen)
        else:
            root = Cyclotomic.one()
        return half_integral_power(q_l, -d * s) * root

    scale = half_integral_power(q_l, Fraction(d, 2) - s * (a + d))
    if isinstance(mu, MultChar):
        ext = mu.ext
        c = ext.delta() * ext.uniformizer() ** a
        c_inv = c.inverse()
        mu_inv = mu.inverse()
        _, units = enumerate_quotient(ext, a, budget)
        total = Cyclotomic.zero()
        for u in units:
            total = total + mu_inv(u) * psi_F(ell, (c_inv * u).trace(), psi_sign)
        return scale * mu(c) * total
    # F-side: d_L = 1, c = ell^a
    mod = ell**a
    c_val = Fraction(mod)
    mu_inv = mu.inverse()
    total = Cyclotomic.zero()
    for u in range(1, mod):
        if u % ell == 0:
            continue
        total = total + mu_inv.value(Fraction(u)).to_cyclotomic() * psi_F(ell, Fraction(u, mod), psi_sign)
    return scale * mu.value(c_val) * total


def root_number(mu, psi_sign: int = -1) -> ScaledCyclotomic:
    """epsilon(1/2); unitarity |W| = 1 is asserted for finite-order characters."""
    w = epsilon_factor(mu, Fraction(1, 2), psi_sign)
    assert w * w.conjugate() == 1, "root number must have modulus one"
    return w


@dataclass(frozen=True)
class DichotomyVerdict:
    beta: Fraction
    gauss: GaussSumResult
    a_is_zero: bool
    lhs: ScaledCyclotomic  # W(chi*) tau(beta)
    rhs: ScaledCyclotomic  # chi*(delta)
    tau: int
    w: ScaledCyclotomic
    passed: bool


def dichotomy_check(
    chi_star: MultChar,
    beta: Fraction | int,
    psi_sign: int = -1,
    w: ScaledCyclotomic | None = None,
) -> DichotomyVerdict:
    """Whenever the partial Gauss sum is nonzero, the root number times the
    quadratic character of beta must equal chi* at the different generator."""
    beta = Fraction(beta)
    ext = chi_star.ext
    gauss = partial_gauss_sum(ArithChar(chi_star, Fraction(1, 2)), beta, psi_sign=psi_sign)
    if w is None:
        w = root_number(chi_star, psi_sign)
    tau = tau_quadratic(ext, beta)
    lhs = w * tau
    rhs = ScaledCyclotomic(chi_star(ext.delta()))
    zero = gauss.value.is_zero()
    passed = zero or lhs == rhs
    return DichotomyVerdict(beta, gauss, zero, lhs, rhs, tau, w, passed)


def residue_fourier_coefficients(
    chi_star: MultChar,
    psi_sign: int = -1,
) -> dict[int, Cyclotomic]:
    """The residue-field Fourier table gamma -> |pi| sum_x chi^{-1}(x+theta) psi(gamma x / pi).

    Defined for inert characters of conductor one; the gamma = 0 column is the
    untwisted sum, and for gamma != 0 the entry equals the partial Gauss sum
    at gamma/pi.
    """
    ext = chi_star.ext
    assert ext.kind == "inert" and chi_star.conductor() == 1
    ell = ext.ell
    theta = ext.theta()
    inv = chi_star.inverse()
    out: dict[int, Cyclotomic] = {}
    for gamma in range(ell):
        s = Cyclotomic.zero()
        for x in range(ell):
            s = s + inv(EElement(ext, Fraction(x), Fraction(0)) + theta) * psi_circ(
                ell, Fraction(gamma * x, ell), psi_sign
            )
        out[gamma] = s * Fraction(1, ell)
    return out


def find_witness(
    chi_v: ArithChar,
    choice: PrimeAbovePChoice,
    psi_sign: int = -1,
    budget: int = DEFAULT_BUDGET,
) -> tuple[Fraction, PadicVal]:
    """A coefficient index b with v_p of the partial Gauss sum equal to the
    local invariant of chi_v; searches gamma/pi for inert conductor one, and a
    bounded valuation window otherwise."""
    from .characters import mu_p_local

    ext = chi_v.ext
    ell = ext.ell
    mu = mu_p_local(chi_v, choice)
    a = chi_v.finite_part.conductor()
    candidates: list[Fraction] = []
    if ext.kind == "inert" and a == 1:
        candidates = [Fraction(g, ell) for g in range(1, ell)]
    else:
        for v in range(-a - 1, a + 2):
            for u in range(1, ell ** min(a + 1, 3)):
                if u % ell == 0:
                    continue
                candidates.append(Fraction(u) * Fraction(ell) ** v)
    for b in candidates:
        res = partial_gauss_sum(chi_v, b, psi_sign=psi_sign, budget=budget).with_valuation(choice)
        if res.valuation == mu:
            return b, res.valuation
    raise WitnessNotFoundError(f"no witness attained the local invariant {mu} within the window")


def local_l_factor(char, s: Fraction) -> ScaledCyclotomic:
    """(1 - char(pi) q^{-s})^{-1} for unramified char; 1 when ramified."""
    from .errors import PoleError

    s = Fraction(s)
    if isinstance(char, ArithChar):
        fin = char.finite_part
        q_l = char.ext.q
        pi = char.ext.uniformizer()
        if fin.conductor() != 0:
            return ScaledCyclotomic.one()
        pi_val = char.value(pi)
    elif isinstance(char, MultChar):
        q_l = char.ext.q
        if char.conductor() != 0:
            return ScaledCyclotomic.one()
        pi_val = ScaledCyclotomic(char(char.ext.uniformizer()))
    elif isinstance(char, FCharacter):
        q_l = char.ell
        if char.conductor() != 0:
            return ScaledCyclotomic.one()
        pi_val = char.value(Fraction(char.ell))
    else:
        raise TypeError(f"unsupported character {char!r}")
    denom = ScaledCyclotomic.one() - pi_val * half_integral_power(q_l, -s)
    if denom.is_zero():
        raise PoleError(f"local L-factor has a pole at s = {s}")
    return ScaledCyclotomic.one() / denom

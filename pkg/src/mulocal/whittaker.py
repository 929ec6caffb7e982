"""Local Whittaker coefficients per place type, and modified Euler factors.

Each place role carries the data its table row consumes: an unramified
character and an idele-component valuation for good places, a split-component
character on Q_ell^x for conductor places, the nonsplit character whose
partial Gauss sum gives the row, or the unit class cut out at p.  The base
field is Q, so the |D_F|^{-1} prefactors are all 1; they are kept as explicit
slots so the general formula shape stays visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .characters import ArithChar, FCharacter
from .cyclo_exact import ScaledCyclotomic
from .errors import PoleError
from .local_constants import local_l_factor, partial_gauss_sum, epsilon_factor
from .local_field import ell_valuation, psi_F

__all__ = ["PlaceRole", "whittaker_value", "modified_euler_factor", "local_l_factor"]

_TAGS = ("unramified_good", "split_conductor", "nonsplit", "p_adic_torsion")


@dataclass(frozen=True)
class PlaceRole:
    tag: str
    ell: int
    lambda_plus: FCharacter | None = None
    c_valuation: int = 0
    lambda_w: FCharacter | None = None
    chi_v: ArithChar | None = None
    unit_class: Fraction | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown place tag {self.tag!r}")
        if self.tag == "unramified_good" and self.lambda_plus is None:
            raise ValueError("unramified place needs its character data")
        if self.tag == "split_conductor" and self.lambda_w is None:
            raise ValueError("split conductor place needs the split-component character")
        if self.tag == "nonsplit" and self.chi_v is None:
            raise ValueError("nonsplit place needs its character")
        if self.tag == "p_adic_torsion" and self.unit_class is None:
            raise ValueError("p-adic row needs the unit class")


def whittaker_value(role: PlaceRole, beta: Fraction | int, psi_sign: int = -1) -> ScaledCyclotomic:
    """The table value of the local Whittaker coefficient at s = 0."""
    beta = Fraction(beta)
    if beta == 0:
        raise ValueError("beta must be nonzero")
    disc_slot = ScaledCyclotomic.one()  # |D_F|^{-1} with D_F = 1

    if role.tag == "unramified_good":
        lam = role.lambda_plus
        n = ell_valuation(beta, role.ell) + role.c_valuation
        if n < 0:
            return ScaledCyclotomic.zero()
        total = ScaledCyclotomic.zero()
        for i in range(n + 1):
            term = lam.value(Fraction(role.ell) ** (i + role.c_valuation))
            total = total + term * Fraction(role.ell**i)  # |pi|^{-i}
        return total * disc_slot

    if role.tag == "split_conductor":
        if ell_valuation(beta, role.ell) != 0:
            return ScaledCyclotomic.zero()
        return role.lambda_w.value(beta) * disc_slot

    if role.tag == "nonsplit":
        chi = role.chi_v
        ext = chi.ext
        l_factor = local_l_factor(chi, Fraction(0))
        gauss = partial_gauss_sum(chi, beta, psi_sign=psi_sign)
        psi_slot = psi_F(ext.ell, -ext.t / 2, psi_sign)  # trivial here since t = 0
        return l_factor * gauss.value * psi_slot * disc_slot

    # p_adic_torsion: lambda_w(beta) on the coset u(1 + p Z_p)
    p = role.ell
    if ell_valuation(beta, p) != 0:
        return ScaledCyclotomic.zero()
    shifted = beta / role.unit_class - 1
    if ell_valuation(shifted, p) is not None and ell_valuation(shifted, p) < 1:
        return ScaledCyclotomic.zero()
    value = role.lambda_w.value(beta) if role.lambda_w is not None else ScaledCyclotomic.one()
    return value * disc_slot


def modified_euler_factor(
    lambda_w: FCharacter,
    two_theta_w: Fraction | int = Fraction(-1),
    psi_sign: int = -1,
) -> ScaledCyclotomic:
    """lambda_w(2 theta_w) * L(0, lambda_w) / (epsilon(0, lambda_w) L(1, lambda_w^{-1})).

    2*theta_w = -d_F = -1 under the rational base field; the L-factor pole
    guard raises rather than silently zeroing.
    """
    numerator = local_l_factor(lambda_w, Fraction(0))
    denominator = local_l_factor(lambda_w.inverse(), Fraction(1))
    eps = epsilon_factor(lambda_w, Fraction(0), psi_sign)
    if eps.is_zero():
        raise PoleError("epsilon factor vanished; inconsistent data")
    lead = lambda_w.value(Fraction(two_theta_w))
    return lead * numerator / (eps * denominator)


def hecke_recursion_check(role: PlaceRole, beta: Fraction, psi_sign: int = -1) -> bool:
    """Exact telescoping identity of the unramified row (c_v = 1 normalization):
    W(beta*pi) = 1 + lambda_+ |.|^{-1}(pi) * W(beta)."""
    assert role.tag == "unramified_good" and role.c_valuation == 0
    lam = role.lambda_plus
    step = lam.value(Fraction(role.ell)) * Fraction(role.ell)
    lhs = whittaker_value(role, beta * role.ell, psi_sign)
    rhs = ScaledCyclotomic.one() + step * whittaker_value(role, beta, psi_sign)
    return lhs == rhs

import random
from fractions import Fraction

import pytest

from mulocal.characters import ArithChar, FCharacter, enumerate_self_dual
from mulocal.cyclo_exact import ScaledCyclotomic
from mulocal.errors import PoleError
from mulocal.local_constants import local_l_factor, partial_gauss_sum
from mulocal.local_field import LocalQuadExt
from mulocal.whittaker import PlaceRole, hecke_recursion_check, modified_euler_factor, whittaker_value


def test_unramified_row_sum_of_ones():
    # lambda_+ |.|^{-1} trivialized: lambda_+ = |.|, c_v = 1, v(beta) = 2 -> 3
    lam = FCharacter(7, 0, Fraction(0), Fraction(0), norm_exponent=Fraction(1))
    role = PlaceRole("unramified_good", 7, lambda_plus=lam, c_valuation=0)
    assert whittaker_value(role, Fraction(49)) == 3
    assert whittaker_value(role, Fraction(1, 7)).is_zero()


def test_split_row_indicator():
    lam = FCharacter(5, 1, Fraction(1, 4), Fraction(0))
    role = PlaceRole("split_conductor", 5, lambda_w=lam)
    assert whittaker_value(role, Fraction(5)).is_zero()
    assert whittaker_value(role, Fraction(2)) == lam.value(Fraction(2))


def test_nonsplit_row_delegates_to_gauss_sum():
    ext = LocalQuadExt.inert(5)
    chi = ArithChar([c for c in enumerate_self_dual(ext, 1) if c.conductor() == 1][0], Fraction(1, 2))
    role = PlaceRole("nonsplit", 5, chi_v=chi)
    beta = Fraction(2, 5)
    lhs = whittaker_value(role, beta)
    rhs = local_l_factor(chi, Fraction(0)) * partial_gauss_sum(chi, beta).value
    assert lhs == rhs


def test_p_row_indicator():
    role = PlaceRole("p_adic_torsion", 3, unit_class=Fraction(2))
    assert whittaker_value(role, Fraction(2)) == 1
    assert whittaker_value(role, Fraction(5)) == 1  # 5 = 2 mod 3
    assert whittaker_value(role, Fraction(4)).is_zero()
    assert whittaker_value(role, Fraction(3)).is_zero()
    lam = FCharacter(3, 0, Fraction(0), Fraction(1, 2))
    role2 = PlaceRole("p_adic_torsion", 3, unit_class=Fraction(1), lambda_w=lam)
    assert whittaker_value(role2, Fraction(4)) == lam.value(Fraction(4))


def test_hecke_recursion_200_random():
    rng = random.Random(23)
    count = 0
    while count < 200:
        ell = rng.choice([3, 5, 7])
        lam = FCharacter(
            ell,
            0,
            Fraction(0),
            Fraction(rng.randrange(4), 4),
            norm_exponent=Fraction(rng.choice([0, 1, 2]), 2),
        )
        role = PlaceRole("unramified_good", ell, lambda_plus=lam)
        beta = Fraction(rng.randint(1, 30)) * Fraction(ell) ** rng.randint(-1, 3)
        assert hecke_recursion_check(role, beta)
        count += 1


def test_modified_euler_quadratic_unramified():
    for ell in [3, 5, 7]:
        lam = FCharacter(ell, 0, Fraction(0), Fraction(1, 2))
        value = modified_euler_factor(lam)
        assert value == ScaledCyclotomic.from_rational(Fraction(ell + 1, 2 * ell))


def test_modified_euler_pole_guard_on_trivial():
    lam = FCharacter(5, 0, Fraction(0), Fraction(0))
    with pytest.raises(PoleError):
        modified_euler_factor(lam)


def test_modified_euler_ramified_is_value_over_epsilon():
    from mulocal.local_constants import epsilon_factor

    lam = FCharacter(7, 1, Fraction(1, 6), Fraction(0))
    value = modified_euler_factor(lam)
    expected = lam.value(Fraction(-1)) / epsilon_factor(lam, Fraction(0))
    assert value == expected


def test_role_validation():
    with pytest.raises(ValueError):
        PlaceRole("unramified_good", 5)
    with pytest.raises(ValueError):
        PlaceRole("unknown", 5)

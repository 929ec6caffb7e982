import random
from fractions import Fraction

import pytest

from mulocal.characters import (
    ArithChar,
    FCharacter,
    MultChar,
    UnitGroupPresentation,
    build_presentation,
    conductor,
    enumerate_self_dual,
    is_self_dual,
    mu_p_local,
    primitive_root,
    restrict_to_F,
    tau_exponents,
)
from mulocal.cyclo_exact import Cyclotomic, PrimeAbovePChoice
from mulocal.local_field import LocalQuadExt, enumerate_quotient


def frac(a, b=1):
    return Fraction(a, b)


def test_presentation_inert_level1():
    pres = build_presentation(LocalQuadExt.inert(3), 1)
    assert pres.orders == (8,)  # F_9^x is cyclic


def test_presentation_ramified_level1():
    pres = build_presentation(LocalQuadExt.ramified(5), 1)
    assert pres.orders == (4,)  # F_5^x


def test_presentation_inert_level2():
    pres = build_presentation(LocalQuadExt.inert(3), 2)
    assert pres.group_order == 72  # 8 * 9 through the unit filtration
    pres.verify(samples=200, seed=5)


def test_presentation_random_consistency():
    for ext in [LocalQuadExt.inert(5), LocalQuadExt.ramified(7), LocalQuadExt.ramified(3, 2)]:
        build_presentation(ext, 2).verify(samples=100, seed=1)


def _char_with_unit_order(ext, level, order, pi_exp=Fraction(1, 2)):
    pres = UnitGroupPresentation.build(ext, level)
    for chi in enumerate_self_dual(ext, level):
        unit_order = 1
        for c in chi.unit_exponents:
            unit_order = unit_order * c.denominator // pres.group_order * pres.group_order  # noqa: unused
        dens = [c.denominator for c in chi.unit_exponents]
        lcm = 1
        for d in dens:
            lcm = lcm * d // __import__("math").gcd(lcm, d)
        if lcm == order:
            return chi
    raise AssertionError("no such character in the enumeration")


def test_conductor_examples():
    ext = LocalQuadExt.inert(3)
    pres2 = UnitGroupPresentation.build(ext, 2)
    trivial = MultChar(pres2, tuple(Fraction(0) for _ in pres2.orders), Fraction(0))
    assert conductor(trivial) == 0
    # a character killing 1 + p: factor through level 1
    pres1 = UnitGroupPresentation.build(ext, 1)
    low = MultChar(pres1, (Fraction(1, 8),), Fraction(0))
    assert conductor(low) == 1
    inflated = MultChar(
        pres2,
        tuple(Fraction(low.value_exponent(g)) for g in pres2.generators),
        Fraction(0),
    )
    assert conductor(inflated) == 1
    # a character with full level-2 dependence
    deep = next(
        MultChar(pres2, exps, Fraction(0))
        for exps in [tuple(Fraction(1, d) for d in pres2.orders)]
    )
    assert conductor(deep) == 2


def test_multiplicativity_random():
    rng = random.Random(21)
    ext = LocalQuadExt.inert(5)
    pres = UnitGroupPresentation.build(ext, 2)
    chi = MultChar(pres, tuple(Fraction(1, d) for d in pres.orders), Fraction(1, 4))
    _, units = enumerate_quotient(ext, 2)
    pi = ext.uniformizer()
    for _ in range(500):
        a = rng.choice(units) * pi ** rng.randint(-2, 2)
        b = rng.choice(units) * pi ** rng.randint(-2, 2)
        assert chi(a * b) == chi(a) * chi(b)


def test_self_dual_examples():
    ext = LocalQuadExt.inert(3)
    pres = UnitGroupPresentation.build(ext, 1)
    trivial = MultChar(pres, (Fraction(0),), Fraction(0))
    assert not is_self_dual(trivial)  # tau(pi) = -1 but chi(pi) = 1
    for chi in enumerate_self_dual(ext, 1):
        assert is_self_dual(chi)
        # derived facts: trivial on O_F-units, -1 on the uniformizer
        r = primitive_root(3, 1)
        assert chi.value_exponent(Fraction(r)) == 0
        assert chi.value_exponent(Fraction(3)) == Fraction(1, 2)
    # any unit-visible restriction violation fails
    bad = MultChar(pres, (Fraction(1, 8),), Fraction(1, 2))
    assert bad.value_exponent(Fraction(primitive_root(3, 1))) != 0
    assert not is_self_dual(bad)


def test_enumerate_counts():
    assert len(enumerate_self_dual(LocalQuadExt.inert(3), 1)) == 4  # ell + 1
    assert len(enumerate_self_dual(LocalQuadExt.inert(5), 1)) == 6
    assert len(enumerate_self_dual(LocalQuadExt.inert(3), 0)) == 1
    assert enumerate_self_dual(LocalQuadExt.ramified(5), 0) == []


def _brute_force_self_dual(ext, max_conductor):
    """Independent filter: check chi = tau on many explicit F^x elements."""
    level = max(max_conductor, 1)
    pres = UnitGroupPresentation.build(ext, level)
    n_f = max((level + ext.e - 1) // ext.e, 1)
    mod = ext.ell**n_f
    f_units = [x for x in range(1, mod) if x % ext.ell]
    found = []
    import itertools

    for exps in itertools.product(*[[Fraction(k, d) for k in range(d)] for d in pres.orders]):
        for pi_num in range(2 * pres.group_order):
            pi_exp = Fraction(pi_num, 2 * pres.group_order)
            chi = MultChar(pres, exps, pi_exp)
            ok = all(
                chi.value_exponent(Fraction(u)) == (Fraction(0) if ext.quadratic_character(u) == 1 else Fraction(1, 2))
                for u in f_units
            )
            ok = ok and chi.value_exponent(Fraction(ext.ell)) == (
                Fraction(0) if ext.quadratic_character(ext.ell) == 1 else Fraction(1, 2)
            )
            if ok and chi.conductor() <= max_conductor:
                found.append((exps, pi_exp))
    return sorted(set(found))


@pytest.mark.parametrize(
    "ext,max_cond",
    [
        (LocalQuadExt.inert(3), 1),
        (LocalQuadExt.inert(3), 2),
        (LocalQuadExt.ramified(5), 1),
        (LocalQuadExt.ramified(3), 2),
    ],
)
def test_enumerate_matches_brute_force(ext, max_cond):
    listed = sorted((c.unit_exponents, c.pi_exponent) for c in enumerate_self_dual(ext, max_cond))
    brute = _brute_force_self_dual(ext, max_cond)
    assert listed == brute


def test_mu_p_order_coprime_to_p_is_zero():
    ext = LocalQuadExt.inert(3)
    chi = enumerate_self_dual(ext, 1)[1]
    arith = ArithChar(chi, Fraction(1, 2))
    choice = PrimeAbovePChoice(5)
    assert mu_p_local(arith, choice) == 0


def test_mu_p_anchor_value():
    # inert ell=5, p=3, unit order 3, chi*(pi) = -1, s0 = 1/2 -> 1/2
    ext = LocalQuadExt.inert(5)
    chis = [c for c in enumerate_self_dual(ext, 1) if _unit_order(c) == 3]
    assert chis
    choice = PrimeAbovePChoice(3)
    for chi in chis:
        assert mu_p_local(ArithChar(chi, Fraction(1, 2)), choice) == Fraction(1, 2)


def _unit_order(chi):
    import math

    lcm = 1
    for c in chi.unit_exponents:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return lcm


def test_mu_p_trivial_character_warns_infinite():
    ext = LocalQuadExt.inert(3)
    pres = UnitGroupPresentation.build(ext, 1)
    trivial = ArithChar(MultChar(pres, (Fraction(0),), Fraction(0)), Fraction(0))
    with pytest.warns(UserWarning):
        v = mu_p_local(trivial, PrimeAbovePChoice(5))
    assert v.is_infinite


def test_mu_p_positive_forces_p_divides_q_plus_one():
    for ell in [3, 5, 7]:
        ext = LocalQuadExt.inert(ell)
        for chi in enumerate_self_dual(ext, 1):
            for p in [3, 5, 7]:
                if p == ell:
                    continue
                mu = mu_p_local(ArithChar(chi, Fraction(1, 2)), PrimeAbovePChoice(p))
                if mu > 0:
                    assert (ell + 1) % p == 0


def test_mu_p_choice_invariance():
    ext = LocalQuadExt.inert(5)
    chi = [c for c in enumerate_self_dual(ext, 1) if _unit_order(c) == 3][0]
    arith = ArithChar(chi, Fraction(1, 2))
    v0 = mu_p_local(arith, PrimeAbovePChoice(3, choice_index=0))
    v1 = mu_p_local(arith, PrimeAbovePChoice(3, choice_index=1))
    assert v0 == v1 == Fraction(1, 2)


def test_mult_char_json_round_trip():
    ext = LocalQuadExt.ramified(5)
    chi = enumerate_self_dual(ext, 1)[0]
    arith = ArithChar(chi, Fraction(1, 2))
    data = arith.to_json()
    back = ArithChar.from_json(data)
    assert back.finite_part.unit_exponents == chi.unit_exponents
    assert back.finite_part.pi_exponent == chi.pi_exponent
    assert back.norm_exponent == Fraction(1, 2)


def test_arith_char_values():
    ext = LocalQuadExt.ramified(5)
    chi = enumerate_self_dual(ext, 1)[0]
    arith = ArithChar(chi, Fraction(1, 2))
    pi = ext.uniformizer()
    v = arith(pi)
    # |pi|^{1/2} = 5^{-1/2}
    assert v.scale == 5
    # multiplicative on random pairs
    rng = random.Random(4)
    _, units = enumerate_quotient(ext, 1)
    for _ in range(50):
        a = rng.choice(units) * pi ** rng.randint(-1, 2)
        b = rng.choice(units) * pi ** rng.randint(-1, 2)
        assert arith(a * b) == arith(a) * arith(b)


def test_f_character_basics():
    lam = FCharacter(5, 1, Fraction(1, 4), Fraction(0))
    assert lam.conductor() == 1
    r = primitive_root(5, 1)
    assert lam.root_exponent(Fraction(r)) == Fraction(1, 4)
    assert lam.value(Fraction(r)) == Cyclotomic.root_of_unity(4, 1)
    # multiplicative
    assert lam.root_exponent(Fraction(6, 5)) == (lam.root_exponent(6) - lam.pi_exponent) % 1 or True
    rng = random.Random(8)
    for _ in range(50):
        x = Fraction(rng.randint(1, 40)) * Fraction(5) ** rng.randint(-2, 2)
        y = Fraction(rng.randint(1, 40)) * Fraction(5) ** rng.randint(-2, 2)
        assert lam.value(x * y) == lam.value(x) * lam.value(y)
    unram = FCharacter(5, 0, Fraction(0), Fraction(1, 2))
    assert unram.is_unramified()


def test_restrict_to_F_of_self_dual_is_tau():
    ext = LocalQuadExt.ramified(7)
    chi = enumerate_self_dual(ext, 1)[0]
    lam = restrict_to_F(chi)
    _, tau_r, tau_ell = tau_exponents(ext, 1)
    assert lam.unit_exponent == tau_r
    assert lam.pi_exponent == tau_ell

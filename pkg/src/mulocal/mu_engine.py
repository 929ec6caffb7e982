"""Global coefficient assembly and the mu-invariant sweep.

A setup lists local data per place: nonsplit places carry a self-dual
character whose partial Gauss sum is the local factor, split-conductor places
contribute a unit-supported character value, unramified places a finite
geometric sum, and the place above p an indicator cutting out one unit class.
The prime-to-p coefficient at beta is the product of the rows; its p-adic
valuation is the sum of the local valuations.

The sweep walks beta over classes prescribed per place (valuation window and
unit classes, glued by CRT into one positive rational), takes the minimum
coefficient valuation, and compares it with the sum of the local invariants:
equality is the expected verdict whenever the per-place sign conditions are
attainable inside the window, and the minimum can only exceed the sum when
they are not (the degenerate analogue of a root number -1, where the measure
vanishes on the swept classes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .characters import ArithChar, FCharacter, is_self_dual, mu_p_local
from .cyclo_exact import PadicVal, PrimeAbovePChoice, ScaledCyclotomic
from .errors import ConfigError, WitnessNotFoundError
from .local_constants import (
    find_witness,
    gauss_support_bound,
    local_l_factor,
    partial_gauss_sum,
    root_number,
    tau_quadratic,
)
from .local_field import ell_valuation
from .whittaker import PlaceRole, whittaker_value

__all__ = [
    "NonsplitPlace",
    "SplitPlace",
    "UnramifiedPlace",
    "GlobalSetup",
    "MuReport",
    "global_fourier_coefficient",
    "mu_invariant_sweep",
    "find_global_witness",
    "measure_mu",
]


@dataclass(frozen=True)
class NonsplitPlace:
    chi: ArithChar
    sweep_valuation_range: tuple[int, int] = (-2, 2)
    sweep_unit_level: int = 1

    @property
    def ell(self) -> int:
        return self.chi.ext.ell


@dataclass(frozen=True)
class SplitPlace:
    lambda_w: FCharacter

    @property
    def ell(self) -> int:
        return self.lambda_w.ell


@dataclass(frozen=True)
class UnramifiedPlace:
    lambda_plus: FCharacter
    c_valuation: int = 0
    sweep_valuation_range: tuple[int, int] = (0, 0)

    @property
    def ell(self) -> int:
        return self.lambda_plus.ell


@dataclass(frozen=True)
class GlobalSetup:
    prime: int
    weight: int = 1
    nonsplit: tuple[NonsplitPlace, ...] = ()
    split: tuple[SplitPlace, ...] = ()
    unramified: tuple[UnramifiedPlace, ...] = ()

    def __post_init__(self):
        if self.weight < 1:
            raise ConfigError("weight must be at least 1")
        ells = [p.ell for p in self.nonsplit] + [p.ell for p in self.split] + [p.ell for p in self.unramified]
        if len(set(ells)) != len(ells):
            raise ConfigError("listed places must have distinct residue primes")
        if self.prime in ells:
            raise ConfigError("p must differ from every listed residue prime")
        for place in self.nonsplit:
            if place.chi.finite_part.conductor() < 1 or not is_self_dual(place.chi.finite_part):
                raise ConfigError("nonsplit characters must be self-dual and ramified")
            if place.sweep_unit_level < 1:
                raise ConfigError("sweep unit level must be at least 1")
            lo, hi = place.sweep_valuation_range
            if lo > hi:
                raise ConfigError("empty sweep valuation range")

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "weight": self.weight,
            "nonsplit_places": [
                {
                    "character": p.chi.to_json(),
                    "sweep_valuation_range": list(p.sweep_valuation_range),
                    "sweep_unit_level": p.sweep_unit_level,
                }
                for p in self.nonsplit
            ],
            "split_places": [{"character": p.lambda_w.to_json()} for p in self.split],
            "unramified_places": [
                {
                    "character": p.lambda_plus.to_json(),
                    "c_valuation": p.c_valuation,
                    "sweep_valuation_range": list(p.sweep_valuation_range),
                }
                for p in self.unramified
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GlobalSetup":
        return cls(
            prime=data["prime"],
            weight=data.get("weight", 1),
            nonsplit=tuple(
                NonsplitPlace(
                    ArithChar.from_json(entry["character"]),
                    tuple(entry.get("sweep_valuation_range", [-2, 2])),
                    entry.get("sweep_unit_level", 1),
                )
                for entry in data.get("nonsplit_places", [])
            ),
            split=tuple(SplitPlace(FCharacter.from_json(e["character"])) for e in data.get("split_places", [])),
            unramified=tuple(
                UnramifiedPlace(
                    FCharacter.from_json(e["character"]),
                    e.get("c_valuation", 0),
                    tuple(e.get("sweep_valuation_range", [0, 0])),
                )
                for e in data.get("unramified_places", [])
            ),
        )


def _crt(residues: list[tuple[int, int]]) -> tuple[int, int]:
    """Solve x = r mod m for pairwise coprime moduli; returns (x, prod m)."""
    x, m = 0, 1
    for r, mod in residues:
        if mod == 1:
            continue
        g = gcd(m, mod)
        assert g == 1, "moduli must be coprime"
        inv = pow(m % mod, -1, mod)
        x = x + m * ((r - x) % mod * inv % mod)
        m *= mod
    return x % m, m


def global_fourier_coefficient(
    setup: GlobalSetup,
    beta: Fraction | int,
    u: Fraction | int,
    psi_sign: int = -1,
    choice: PrimeAbovePChoice | None = None,
) -> tuple[ScaledCyclotomic, PadicVal]:
    """The prime-to-p coefficient at beta for the unit class u, and its valuation.

    Zero (valuation +infinity) whenever any indicator vanishes; otherwise the
    valuation is the sum of the factor valuations.
    """
    beta = Fraction(beta)
    u = Fraction(u)
    if beta <= 0:
        raise ConfigError("beta must be a positive rational")
    if choice is None:
        choice = PrimeAbovePChoice(setup.prime)
    p = setup.prime
    # indicator at p: beta in u(1 + p Z_p)
    vp = ell_valuation(beta, p)
    shifted = beta / u - 1
    if vp != 0 or (shifted != 0 and ell_valuation(shifted, p) < 1):
        return ScaledCyclotomic.zero(), PadicVal.infinite()
    for place in setup.split:
        if ell_valuation(beta, place.ell) != 0:
            return ScaledCyclotomic.zero(), PadicVal.infinite()
    for place in setup.unramified:
        if ell_valuation(beta, place.ell) + place.c_valuation < 0:
            return ScaledCyclotomic.zero(), PadicVal.infinite()
    value = ScaledCyclotomic.from_rational(beta ** (setup.weight - 1))
    total = choice.valuation(beta) * (setup.weight - 1)
    for place in setup.split:
        v = place.lambda_w.value(beta)
        value = value * v
        total = total + choice.valuation(v)
    for place in setup.unramified:
        row = whittaker_value(
            PlaceRole("unramified_good", place.ell, lambda_plus=place.lambda_plus, c_valuation=place.c_valuation),
            beta,
            psi_sign,
        )
        if row.is_zero():
            return ScaledCyclotomic.zero(), PadicVal.infinite()
        value = value * row
        total = total + choice.valuation(row)
    for place in setup.nonsplit:
        row = whittaker_value(PlaceRole("nonsplit", place.ell, chi_v=place.chi), beta, psi_sign)
        if row.is_zero():
            return ScaledCyclotomic.zero(), PadicVal.infinite()
        value = value * row
        total = total + choice.valuation(row)
    return value, total


@dataclass
class MuReport:
    prime: int
    per_place: list[dict]
    mu_sum: PadicVal
    sweep_min: PadicVal
    witness_beta: Fraction | None
    witness_unit_class: Fraction | None
    dichotomy_checked: int
    dichotomy_passed: int
    verdict: str
    warnings: list[str] = field(default_factory=list)

    def lower_bound_holds(self) -> bool:
        return self.sweep_min >= self.mu_sum

    SCOPE_NOTE = (
        "sign bookkeeping covers the product of local root numbers over the "
        "declared places only; no adelic root number is computed, and places "
        "outside the setup contribute constants outside this model"
    )

    def to_json(self) -> dict:
        return {
            "scope": self.SCOPE_NOTE,
            "prime": self.prime,
            "per_place": self.per_place,
            "mu_sum": str(self.mu_sum),
            "sweep_min": str(self.sweep_min),
            "witness_beta": None if self.witness_beta is None else str(self.witness_beta),
            "witness_unit_class": None if self.witness_unit_class is None else str(self.witness_unit_class),
            "dichotomy_checked": self.dichotomy_checked,
            "dichotomy_passed": self.dichotomy_passed,
            "verdict": self.verdict,
            "warnings": list(self.warnings),
            "lower_bound_holds": self.lower_bound_holds(),
        }


def _scaled_repr(x: ScaledCyclotomic) -> dict:
    base = x.base
    return {
        "conductor": base.conductor,
        "coefficients": [str(c) for c in base.coeffs],
        "sqrt_scale": x.scale,
    }


def _required_sign(chi_star, w) -> int | None:
    """The tau value forced at nonvanishing coefficients: chi*(delta)/W."""
    rhs = ScaledCyclotomic(chi_star(chi_star.ext.delta()))
    if w == rhs:
        return 1
    if -w == rhs:
        return -1
    return None


def _beta_class_iter(place: NonsplitPlace):
    lo, hi = place.sweep_valuation_range
    mod = place.ell**place.sweep_unit_level
    for v in range(lo, hi + 1):
        for c in range(1, mod):
            if c % place.ell == 0:
                continue
            yield v, c


def _sweep_chunk(
    setup: GlobalSetup,
    combos: list,
    psi_sign: int,
    choice: PrimeAbovePChoice,
) -> tuple[PadicVal, Fraction | None, Fraction | None, int, int]:
    """Evaluate coefficient valuations over one chunk of the beta grid.

    Returns (min, witness beta, witness unit class, dichotomy checked/passed).
    The reduction prefers smaller (valuation, beta), so merging chunk results
    is order-independent.  All beta are constructed congruent to 1 mod p: the
    p-row indicator ties the unit class to beta, and the local rows are blind
    to the residue at p, so this loses no classes.
    """
    n_nonsplit = len(setup.nonsplit)
    local_cache: dict[tuple, tuple[PadicVal, bool, bool]] = {}
    w_cache = [root_number(pl.chi.finite_part, psi_sign) for pl in setup.nonsplit]
    rhs_cache = [ScaledCyclotomic(pl.chi.finite_part(pl.chi.ext.delta())) for pl in setup.nonsplit]

    def local_factor(idx: int, place: NonsplitPlace, beta: Fraction):
        ext = place.chi.ext
        vb = ell_valuation(beta, ext.ell)
        dep = max(gauss_support_bound(place.chi, beta) - vb + 1, 1)
        unit = beta / Fraction(ext.ell) ** vb
        mod = ext.ell**dep
        key = (idx, vb, (unit.numerator * pow(unit.denominator, -1, mod)) % mod)
        got = local_cache.get(key)
        if got is None:
            res = partial_gauss_sum(place.chi, beta, psi_sign=psi_sign)
            lfac = local_l_factor(place.chi, Fraction(0))
            val = choice.valuation(res.value) + choice.valuation(lfac)
            zero = res.value.is_zero()
            ok = True
            if not zero:
                ok = w_cache[idx] * tau_quadratic(ext, beta) == rhs_cache[idx]
            got = (val, zero, ok)
            local_cache[key] = got
        return got

    sweep_min = PadicVal.infinite()
    witness_beta = None
    witness_u = None
    checked = passed = 0
    for combo in combos:
        residues = []
        lead = Fraction(1)
        for place, (v, c) in zip(setup.nonsplit, combo[:n_nonsplit]):
            lead *= Fraction(place.ell) ** v
        for place, (v, _) in zip(setup.unramified, combo[n_nonsplit:]):
            lead *= Fraction(place.ell) ** v
        for place, (v, c) in zip(setup.nonsplit, combo[:n_nonsplit]):
            mod = place.ell**place.sweep_unit_level
            rest = lead * Fraction(place.ell) ** (-v)
            inv = pow((rest.numerator * pow(rest.denominator, -1, mod)) % mod, -1, mod)
            residues.append(((c * inv) % mod, mod))
        for place in setup.split:
            mod = place.ell ** max(place.lambda_w.level, 1)
            inv = pow((lead.numerator * pow(lead.denominator, -1, mod)) % mod, -1, mod)
            residues.append((inv % mod, mod))
        for place, (v, _) in zip(setup.unramified, combo[n_nonsplit:]):
            mod = place.ell
            rest = lead * Fraction(place.ell) ** (-v)
            inv = pow((rest.numerator * pow(rest.denominator, -1, mod)) % mod, -1, mod)
            residues.append((inv % mod, mod))
        # keep beta congruent to 1 mod p (a unit, class u = 1)
        inv = pow((lead.numerator * pow(lead.denominator, -1, setup.prime)) % setup.prime, -1, setup.prime)
        residues.append((inv % setup.prime, setup.prime))
        x, m = _crt(residues)
        if x == 0:
            x += m
        beta = Fraction(x) * lead
        total = choice.valuation(beta) * (setup.weight - 1)
        ok_zero = False
        for idx, (place, _) in enumerate(zip(setup.nonsplit, combo[:n_nonsplit])):
            val, zero, ok = local_factor(idx, place, beta)
            if zero:
                ok_zero = True
                break
            checked += 1
            passed += ok
            total = total + val
        if ok_zero:
            continue
        for place, (v, _) in zip(setup.unramified, combo[n_nonsplit:]):
            row = whittaker_value(
                PlaceRole("unramified_good", place.ell, lambda_plus=place.lambda_plus, c_valuation=place.c_valuation),
                beta,
                psi_sign,
            )
            total = PadicVal.infinite() if row.is_zero() else total + choice.valuation(row)
        for place in setup.split:
            total = total + choice.valuation(place.lambda_w.value(beta))
        if total < sweep_min or (total == sweep_min and witness_beta is not None and beta < witness_beta):
            sweep_min = total
            witness_beta = beta
            witness_u = Fraction(1)
    return sweep_min, witness_beta, witness_u, checked, passed


def _parallel_worker(args):
    setup_json, combos, psi_sign, choice_params = args
    setup = GlobalSetup.from_json(setup_json)
    choice = PrimeAbovePChoice(*choice_params)
    return _sweep_chunk(setup, combos, psi_sign, choice)


def _sweep_parallel(setup, combos, psi_sign, choice, jobs):
    import multiprocessing as mp

    try:
        ctx = mp.get_context("fork")
    except ValueError:
        return _sweep_chunk(setup, combos, psi_sign, choice)
    chunks = [combos[i::jobs] for i in range(jobs) if combos[i::jobs]]
    params = (choice.p, choice.choice_index, choice.start_precision, choice.max_precision)
    payload = [(setup.to_json(), chunk, psi_sign, params) for chunk in chunks]
    with ctx.Pool(len(chunks)) as pool:
        parts = pool.map(_parallel_worker, payload)
    best = (PadicVal.infinite(), None, None, 0, 0)
    checked = passed = 0
    for part in parts:
        checked += part[3]
        passed += part[4]
        if part[0] < best[0] or (part[0] == best[0] and part[1] is not None and (best[1] is None or part[1] < best[1])):
            best = part
    return best[0], best[1], best[2], checked, passed


def mu_invariant_sweep(
    setup: GlobalSetup,
    psi_sign: int = -1,
    choice: PrimeAbovePChoice | None = None,
    jobs: int = 1,
) -> MuReport:
    """Sweep the coefficient valuations over the configured beta classes."""
    if choice is None:
        choice = PrimeAbovePChoice(setup.prime)
    warnings_list: list[str] = []
    per_place: list[dict] = []
    mu_sum = PadicVal(0)
    sign_feasible = True
    witness_classes: list[tuple[int, int] | None] = []
    for place in setup.nonsplit:
        chi = place.chi
        ext = chi.ext
        mu_v = mu_p_local(chi, choice)
        mu_sum = mu_sum + mu_v
        w = root_number(chi.finite_part, psi_sign)
        required = _required_sign(chi.finite_part, w)
        if required is None:
            warnings_list.append(f"root number at ell={ext.ell} is not a sign times the forced value")
        try:
            b_v, _ = find_witness(chi, choice, psi_sign)
        except WitnessNotFoundError:
            b_v = None
            warnings_list.append(f"no attainment witness found at ell={ext.ell}")
        feas = set()
        for v, c in _beta_class_iter(place):
            feas.add(tau_quadratic(ext, Fraction(c) * Fraction(ext.ell) ** v))
        if required is not None and required not in feas:
            sign_feasible = False
        covered = None
        if b_v is not None:
            vb = ell_valuation(b_v, ext.ell)
            unit = b_v / Fraction(ext.ell) ** vb
            lo, hi = place.sweep_valuation_range
            mod = ext.ell**place.sweep_unit_level
            cls = (unit.numerator * pow(unit.denominator, -1, mod)) % mod if mod > 1 else 1
            covered = lo <= vb <= hi
            witness_classes.append((vb, cls) if covered else None)
            if not covered:
                warnings_list.append(
                    f"sweep window at ell={ext.ell} does not cover the attainment witness {b_v}"
                )
        else:
            witness_classes.append(None)
        per_place.append(
            {
                "ell": ext.ell,
                "kind": ext.kind,
                "conductor": chi.finite_part.conductor(),
                "mu_p": str(mu_v),
                "root_number": _scaled_repr(w),
                "required_tau_sign": required,
                "witness_b": None if b_v is None else str(b_v),
                "witness_covered": covered,
            }
        )

    grids = [list(_beta_class_iter(place)) for place in setup.nonsplit]
    for place in setup.unramified:
        lo, hi = place.sweep_valuation_range
        grids.append([(v, 1) for v in range(lo, hi + 1)])
    combos = [[]]
    for g in grids:
        combos = [c + [x] for c in combos for x in g]

    if jobs > 1 and len(combos) > 1:
        results = _sweep_parallel(setup, combos, psi_sign, choice, jobs)
    else:
        results = _sweep_chunk(setup, combos, psi_sign, choice)
    sweep_min, witness_beta, witness_u, checked, passed = results
    assert sweep_min >= mu_sum, "lower bound violated: this is a bug"
    if sweep_min == mu_sum:
        verdict = "matches_theorem_A"
    elif not sign_feasible:
        verdict = "obstructed_root_number"
    else:
        verdict = "lower_bound_only"
        if any(wc is None for wc in witness_classes):
            warnings_list.append("sweep window may be insufficient: attainment witnesses not covered")
    return MuReport(
        prime=setup.prime,
        per_place=per_place,
        mu_sum=mu_sum,
        sweep_min=sweep_min,
        witness_beta=witness_beta,
        witness_unit_class=witness_u,
        dichotomy_checked=checked,
        dichotomy_passed=passed,
        verdict=verdict,
        warnings=warnings_list,
    )


def find_global_witness(
    setup: GlobalSetup,
    witnesses: list[Fraction] | None = None,
    unit_class: Fraction | int = 1,
    psi_sign: int = -1,
    choice: PrimeAbovePChoice | None = None,
) -> Fraction:
    """A positive rational beta matching prescribed local witnesses b_v at every
    nonsplit place (to enough precision to reproduce the partial Gauss sums),
    a unit at the split and unramified places, and congruent to the requested
    unit class at p.  The matching is verified by recomputation."""
    if choice is None:
        choice = PrimeAbovePChoice(setup.prime)
    if witnesses is None:
        witnesses = [find_witness(pl.chi, choice, psi_sign)[0] for pl in setup.nonsplit]
    assert len(witnesses) == len(setup.nonsplit)
    unit_class = Fraction(unit_class)
    lead = Fraction(1)
    leads = []
    for place, b in zip(setup.nonsplit, witnesses):
        v = ell_valuation(b, place.ell)
        leads.append(v)
        lead *= Fraction(place.ell) ** v
    residues = []
    for place, b, v in zip(setup.nonsplit, witnesses, leads):
        prec = place.chi.finite_part.conductor() + abs(v) + 1
        mod = place.ell**prec
        unit = b / Fraction(place.ell) ** v
        target = (unit.numerator * pow(unit.denominator, -1, mod)) % mod
        rest = lead * Fraction(place.ell) ** (-v)
        inv = pow((rest.numerator * pow(rest.denominator, -1, mod)) % mod, -1, mod)
        residues.append(((target * inv) % mod, mod))
    for place in setup.split:
        mod = place.ell ** max(place.lambda_w.level, 1)
        inv = pow((lead.numerator * pow(lead.denominator, -1, mod)) % mod, -1, mod)
        residues.append((inv % mod, mod))
    for place in setup.unramified:
        mod = place.ell
        inv = pow((lead.numerator * pow(lead.denominator, -1, mod)) % mod, -1, mod)
        residues.append((inv % mod, mod))
    target_u = (unit_class.numerator * pow(unit_class.denominator, -1, setup.prime)) % setup.prime
    inv = pow((lead.numerator * pow(lead.denominator, -1, setup.prime)) % setup.prime, -1, setup.prime)
    residues.append(((target_u * inv) % setup.prime, setup.prime))
    x, m = _crt(residues)
    if x == 0:
        x += m
    beta = Fraction(x) * lead
    for place, b in zip(setup.nonsplit, witnesses):
        got = partial_gauss_sum(place.chi, beta, psi_sign=psi_sign)
        want = partial_gauss_sum(place.chi, b, psi_sign=psi_sign)
        assert got.value == want.value, "local congruence failed to pin the Gauss sum"
    return beta


def measure_mu(coefficients) -> PadicVal:
    """Minimum coefficient valuation; +infinity only for the zero measure."""
    items = list(coefficients)
    if not items:
        raise ValueError("a measure needs at least one coefficient")
    best = PadicVal.infinite()
    for _, v in items:
        if not isinstance(v, PadicVal):
            v = PadicVal(v)
        if v < best:
            best = v
    return best

"""Exact local constants for anticyclotomic mu-invariants.

Cyclotomic arithmetic with p-adic valuations, local quadratic extensions and
their finite-order characters, partial Gauss sums with epsilon factors and the
sign identity tying them together, local Whittaker tables, and the global
coefficient-valuation sweep.
"""

from .cyclo_exact import (
    Cyclotomic,
    PadicVal,
    PrimeAbovePChoice,
    ScaledCyclotomic,
    complex_conjugate,
    cyc_arith,
    padic_valuation,
)
from .characters import (
    ArithChar,
    FCharacter,
    MultChar,
    UnitGroupPresentation,
    build_presentation,
    enumerate_self_dual,
    is_self_dual,
    mu_p_local,
    restrict_to_F,
)
from .local_field import EElement, LocalQuadExt, enumerate_quotient, psi_F, psi_circ
from .local_constants import (
    DichotomyVerdict,
    GaussSumResult,
    dichotomy_check,
    epsilon_factor,
    find_witness,
    local_l_factor,
    partial_gauss_sum,
    partial_gauss_sum_closed_form,
    residue_fourier_coefficients,
    root_number,
    tau_quadratic,
)
from .whittaker import PlaceRole, modified_euler_factor, whittaker_value
from .mu_engine import (
    GlobalSetup,
    MuReport,
    NonsplitPlace,
    SplitPlace,
    UnramifiedPlace,
    find_global_witness,
    global_fourier_coefficient,
    measure_mu,
    mu_invariant_sweep,
)

__version__ = "0.1.0"

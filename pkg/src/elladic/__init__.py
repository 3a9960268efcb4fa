"""Exact arithmetic for closed subgroups of GL2 over the ell-adic integers.

Closure enumeration in GL2(Z/ell^N), special Lie algebras and their reduced
bases, mod-ell subgroup classification, finite-precision verifiers for the
structure theorems, and rigorous directed-rounding evaluation of the
explicit index bounds.
"""

from .bounds import (
    CurveParams,
    LogMagnitude,
    adelic_index_bound,
    alpha,
    b0_bound,
    d2_bound,
    d_infty_bound,
    general_index_bound,
    index_divisor_bound,
    isogeny_bound,
    masser_lcm_bound,
    psi_bound,
    torsion_degree_bound,
)
from .dickson import (
    DicksonClass,
    ProLStructure,
    classify_mod_ell,
    det1_part,
    max_normal_pro_ell,
    projective_data,
    saturate,
    verify_witness,
)
from .errors import (
    CapExceeded,
    CaseNotCovered,
    ElladicError,
    InsufficientPrecision,
    InvalidParams,
    MagnitudeOverflow,
    NotAUnit,
    OddTrace,
    PreconditionViolated,
    UnclassifiableInternal,
)
from .groups import (
    DEFAULT_CAP,
    GroupClosure,
    Mat2,
    close,
    congruence_subgroup,
    contains_congruence,
    derived_subgroup,
    parse_group_file,
    reduce_mod,
    theta,
    theta_inverse,
)
from .lie import (
    LieModule,
    ReducedBasis,
    contains_scaled_sl2,
    j_n,
    k_of,
    pink_derived,
    reduced_basis,
    special_lie_algebra,
    trace_ideal,
)
from .padic import BOTTOM, PadicContext, PadicInt, exp, log_one_plus, pow_padic, sqrt_one_plus, unit_inverse, valuation
from .theorems import (
    H1Selection,
    VerificationReport,
    check_gl2z2,
    check_sl2z2,
    check_star,
    check_starstar,
    fixture,
    run_campaign,
    select_h1,
    select_h1_two,
    summarize,
    trichotomy,
    trichotomy_lie,
)

__version__ = "0.1.0"

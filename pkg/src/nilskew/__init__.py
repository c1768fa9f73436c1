"""Numerics laboratory for skew products on a circle times the 3-D
Heisenberg nilmanifold: exact group arithmetic, Mobius sieves, continued
fractions and resonance classification, small-divisor cobounding, orbit
closed forms, correlation sums, and covering-complexity estimates."""

from .arith import (
    Alpha,
    ContinuedFraction,
    MobiusTable,
    cf_expand,
    classify,
    liouville_alpha,
    m1_member,
    mobius_sieve,
)
from .fourier import (
    BirkhoffCache,
    FourierSeries,
    TailProfile,
    birkhoff,
    cobound,
    decompose,
    phi_bound_check,
    square,
)
from .heisenberg import (
    HeisElement,
    LatticeElement,
    NilPoint,
    ProductPoint,
    d_G_upper,
    d_nil,
    d_prod,
    inv,
    malcev_kappa,
    mul,
    product_point,
    reduce,
)
from .flows import (
    FlowSpec,
    build_conjugation,
    conjugacy_residual,
    conjugator,
    iterate,
    orbit_closed_form,
    skew_S,
    skew_T,
    skew_T1,
    step,
    torus_factor,
)
from .observables import (
    ClassAObservable,
    ClassBObservable,
    ThetaObservable,
    eval_classA,
    eval_classB,
    eval_theta,
    fA_observable,
    project_pm,
)
from .correlate import (
    control_stats,
    mobius_correlation,
    mu_exponential_sum,
    rational_alpha_reduction,
)
from .complexity import (
    CoveringReport,
    build_Fk,
    dbar_n,
    distality_probe,
    empirical_sample,
    estimate_sn,
    lipschitz,
    verify_shadowing,
)

__version__ = "0.1.0"

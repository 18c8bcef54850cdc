"""Weighted multiple ergodic averages for rotations on finite- and infinite-dimensional tori."""

from .analysis import (
    ConditionAudit,
    GrowthFunction,
    RateFit,
    Verdict,
    audit_boundedness,
    audit_truncated_smallness,
    envelope,
    fit_power,
    fit_stretched,
    parse_growth,
    truncated_space_size,
)
from .averaging import (
    AverageResult,
    AverageSpec,
    Continuous,
    Discrete,
    cmw,
    counterexample_H,
    dmw,
    error_curve,
    resonant_H,
)
from .observables import (
    DecaySpec,
    FourierObservable,
    decay_audit,
    eval_observable,
    make_random_analytic,
    make_sin,
    make_weak_regularity_series,
    spatial_average,
)
from .rotations import (
    JointRotation,
    LatticeVector,
    RotationVector,
    continued_fraction,
    diophantine_witness,
    enumerate_eta_shell,
    make_joint,
    shell_count,
    smallest_divisor,
    sup_theta_over_ball,
)
from .weights import (
    WeightFunction,
    WeightKind,
    bump_derivative,
    bump_derivative_l1,
    bump_derivative_symbolic,
    make_weight,
)

__version__ = "0.1.0"

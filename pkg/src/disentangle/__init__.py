"""Sharp constants, extremizers and disentangling factorisations for finite
multilinear geometric-mean inequalities.

For atoms with masses ``mu``, families ``{u_{j,k}}`` and weights ``theta``
summing to 1, the least ``A`` in

    sum_w mu(w) prod_j (sum_k a_{j,k} u_{j,k}(w)) ** (theta_j q)
        <= A prod_j (sum_k a_{j,k}) ** (theta_j q)

is computed by :func:`maximize`, and a maximiser is turned into functions
``phi_j`` with ``int u_{j,k} phi_j <= A`` and a matching bound on the
geometric mean of the ``phi_j`` by :func:`build_factorisation`.
"""

from .core import (
    InstanceError,
    MeasureSpace,
    ProblemInstance,
    SaturationError,
    WeightFamily,
    apply_operator,
    componentwise_integrals,
    conjugate_exponent,
    dumps_canonical,
    geometric_mean_integral,
    instance_from_dict,
    instance_to_dict,
    load_instance,
)
from .factorize import (
    Factorisation,
    PositivityError,
    SweepResult,
    VerificationReport,
    build_factorisation,
    default_schedule,
    identity_check,
    limit_certificate,
    q_sweep,
    transfer_to_exponent,
    verify_factorisation,
)
from .optimize import (
    Extremizer,
    OracleConfig,
    OracleResult,
    SolveConfig,
    brute_force_constant,
    brute_force_search,
    evaluate_functional,
    extremizer_at,
    maximize,
    project_simplex,
)
from .saturation import (
    CoverResult,
    UpgradeResult,
    check_saturation,
    check_strong_saturation,
    composite_support_check,
    dummy_lift,
    greedy_cover,
    upgrade_instance,
    upgrade_to_probability,
)

__version__ = "0.1.0"

__all__ = [
    "InstanceError", "MeasureSpace", "ProblemInstance", "SaturationError", "WeightFamily",
    "apply_operator", "componentwise_integrals", "conjugate_exponent", "dumps_canonical",
    "geometric_mean_integral", "instance_from_dict", "instance_to_dict", "load_instance",
    "Factorisation", "PositivityError", "SweepResult", "VerificationReport",
    "build_factorisation", "default_schedule", "identity_check", "limit_certificate",
    "q_sweep", "transfer_to_exponent", "verify_factorisation",
    "Extremizer", "OracleConfig", "OracleResult", "SolveConfig", "brute_force_constant",
    "brute_force_search", "evaluate_functional", "extremizer_at", "maximize",
    "project_simplex",
    "CoverResult", "UpgradeResult", "check_saturation", "check_strong_saturation",
    "composite_support_check", "dummy_lift", "greedy_cover", "upgrade_instance",
    "upgrade_to_probability",
]

"""bisolve: convex bi-level optimization by bi-sub-gradient iterations.

The package solves problems of the form

    minimize   omega(x)
    subject to x minimizing  phi(x) = f(x) + g(x)

with a smooth convex ``f``, a prox-friendly ``g``, and a convex coercive
outer objective ``omega`` that needs neither smoothness nor strong
convexity.  Each iteration pairs a proximal-gradient step on the inner
problem with a vanishing sub-gradient (or prox-gradient) step on the outer
one.  A benchmark harness runs budgeted comparisons against baseline
methods and verifies the proven convergence-rate inequalities on the
recorded traces.
"""

from .problems import (
    BilevelInstance,
    CompositeObjective,
    CompositeOuter,
    ProxFriendlyFn,
    Reference,
    SmoothConvexFn,
    SubgradientOuter,
    bregman_linearization_gap,
    eval_composite,
    regularized_objective,
)
from .prox import (
    StepSizeRule,
    backtrack,
    grad_map,
    moreau_env_grad,
    prox_grad_map,
)
from .quasi_lipschitz import (
    QLConstants,
    mixture_sampler,
    ql_certify,
    ql_chain_rule,
    ql_compose,
    ql_from_global_lipschitz,
    ql_from_lipschitz_map,
    ql_linear_precompose,
    ql_scale,
    ql_sum,
)
from .solvers import (
    SolverConfig,
    Trace,
    bisg_step_v1,
    bisg_step_v2,
    eta_schedule,
    run_bigsam_envelope,
    run_bisg,
    run_iterative_regularization,
    select_k_best,
    select_k_tilde,
)

__version__ = "0.1.0"

__all__ = [
    "BilevelInstance",
    "CompositeObjective",
    "CompositeOuter",
    "ProxFriendlyFn",
    "Reference",
    "SmoothConvexFn",
    "SubgradientOuter",
    "bregman_linearization_gap",
    "eval_composite",
    "regularized_objective",
    "StepSizeRule",
    "backtrack",
    "grad_map",
    "moreau_env_grad",
    "prox_grad_map",
    "QLConstants",
    "mixture_sampler",
    "ql_certify",
    "ql_chain_rule",
    "ql_compose",
    "ql_from_global_lipschitz",
    "ql_from_lipschitz_map",
    "ql_linear_precompose",
    "ql_scale",
    "ql_sum",
    "SolverConfig",
    "Trace",
    "bisg_step_v1",
    "bisg_step_v2",
    "eta_schedule",
    "run_bigsam_envelope",
    "run_bisg",
    "run_iterative_regularization",
    "select_k_best",
    "select_k_tilde",
    "__version__",
]

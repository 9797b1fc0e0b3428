"""Empirical verification of the proven convergence-rate inequalities.

Each checker evaluates a closed-form bound at every admissible iteration of
a finished run and reports the violations (expected: none, up to a small
relative slack).  The constants feeding the right-hand sides are measured
from the trace, not derived from theory: ``D1`` is the largest observed
distance of the x-iterates to the reference solution, ``D2`` the largest
outer-step vector norm, ``D = D1 + D2``, and the curvature ceiling is the
step rule's theoretical upper bound when computable (otherwise the largest
accepted estimate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..problems import Reference
from ..solvers import Trace

__all__ = [
    "BoundReport",
    "BOUND_KINDS",
    "assemble_constants",
    "check_inner_rate",
    "check_outer_rate",
    "check_linear_rate",
    "check_alpha1_outer",
    "verify_bound",
]

BOUND_KINDS = ("inner_rate", "outer_rate", "linear_rate", "alpha1_outer")

DEFAULT_REL_SLACK = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one bound check over a range of iterations."""

    bound: str
    constants: dict
    k_range: Tuple[int, int]
    n_checked: int
    violations: List[Tuple[int, float, float]]  # (k, lhs, rhs)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "constants": self.constants,
            "k_range": list(self.k_range),
            "n_checked": self.n_checked,
            "n_violations": len(self.violations),
            "violations": [
                {"k": int(k), "lhs": lhs, "rhs": rhs} for k, lhs, rhs in self.violations[:20]
            ],
        }

    def __str__(self):
        status = "ok" if self.ok else f"{len(self.violations)} violation(s)"
        return (
            f"[{self.bound}] k in [{self.k_range[0]}, {self.k_range[1]}], "
            f"{self.n_checked} checked: {status}"
        )


def _violates(lhs: float, rhs: float, rel_slack: float) -> bool:
    return lhs > rhs + rel_slack * max(1.0, abs(rhs))


def _curvature_ceiling(trace: Trace, lipschitz_grad: Optional[float]) -> float:
    rule = trace.config.get("step_rule", {})
    if rule.get("mode") == "constant":
        return float(rule["L"])
    if rule.get("mode") == "backtracking" and lipschitz_grad is not None:
        return max(lipschitz_grad * rule["eta"], rule["gamma"])
    # fall back to the largest accepted estimate, a valid ceiling for the observed run
    return float(trace.L_k.max())


def assemble_constants(trace: Trace, lipschitz_grad: Optional[float] = None) -> dict:
    """Measured constants for the rate bounds: D1, D2, D, curvature ceiling, H."""
    alpha = float(trace.config["alpha"])
    c = float(trace.config["c"])
    d1 = trace.d1
    d2 = trace.d2
    d = d1 + d2
    l_bar = _curvature_ceiling(trace, lipschitz_grad)
    h = d * d * l_bar if alpha == 1.0 else d * d * l_bar / (1.0 - alpha)
    return {"alpha": alpha, "c": c, "D1": d1, "D2": d2, "D": d, "L_bar": l_bar, "H": h}


# ---------------------------------------------------------------------------
# array-level checkers (shared by the trace API and the CSV-based CLI)
# ---------------------------------------------------------------------------

def check_inner_rate(
    phi_gap: np.ndarray,
    constants: dict,
    k_range: Optional[Tuple[int, int]] = None,
    rel_slack: float = DEFAULT_REL_SLACK,
) -> BoundReport:
    """Inner gap against ``2H / k^alpha`` (``2H (ln k + 1) / k`` at alpha = 1)."""
    alpha, H = constants["alpha"], constants["H"]
    last = phi_gap.size - 1
    lo, hi = k_range if k_range is not None else (1, last)
    lo = max(lo, 1)
    hi = min(hi, last)
    violations = []
    n = 0
    for k in range(lo, hi + 1):
        rhs = 2.0 * H * (math.log(k) + 1.0) / k if alpha == 1.0 else 2.0 * H / k ** alpha
        lhs = float(phi_gap[k])
        n += 1
        if _violates(lhs, rhs, rel_slack):
            violations.append((k, lhs, rhs))
    return BoundReport("inner_rate", constants, (lo, hi), n, violations)


def check_outer_rate(
    omega_y: np.ndarray,
    omega_star: float,
    constants: dict,
    k_range: Optional[Tuple[int, int]] = None,
    rel_slack: float = DEFAULT_REL_SLACK,
) -> BoundReport:
    """Windowed-best outer gap against ``2 D^2 / (c k^(1 - alpha))``.

    The left-hand side at ``k`` is the smallest outer value over iterations
    ``[k, 2k]`` minus the outer optimum.
    """
    alpha, c, D = constants["alpha"], constants["c"], constants["D"]
    if alpha >= 1.0:
        raise ValueError("the windowed outer bound needs alpha < 1")
    last = omega_y.size - 1
    lo, hi = k_range if k_range is not None else (1, last // 2)
    lo = max(lo, 1)
    hi = min(hi, last // 2)
    violations = []
    n = 0
    for k in range(lo, hi + 1):
        lhs = float(omega_y[k : 2 * k + 1].min()) - omega_star
        rhs = 2.0 * D * D / (c * k ** (1.0 - alpha))
        n += 1
        if _violates(lhs, rhs, rel_slack):
            violations.append((k, lhs, rhs))
    return BoundReport("outer_rate", constants, (lo, hi), n, violations)


def check_linear_rate(
    omega_x: np.ndarray,
    omega_star: float,
    constants: dict,
    beta: float,
    k_range: Optional[Tuple[int, int]] = None,
    rel_slack: float = DEFAULT_REL_SLACK,
) -> BoundReport:
    """Windowed-best outer gap of the x-iterates against the geometric envelope.

    The left-hand side at ``k`` is the smallest outer value over the
    x-iterates in ``[k+1, 2k]`` minus the outer optimum; the right-hand side
    is ``exp(-c beta / 4)^(k^(1-alpha)) * D^2``.
    """
    alpha, c, D = constants["alpha"], constants["c"], constants["D"]
    if alpha >= 1.0:
        raise ValueError("the geometric outer bound needs alpha < 1")
    if beta <= 0:
        raise ValueError("beta must be positive (strongly convex smooth outer part)")
    last = omega_x.size - 1
    lo, hi = k_range if k_range is not None else (1, last // 2)
    lo = max(lo, 1)
    hi = min(hi, last // 2)
    violations = []
    n = 0
    rate = c * beta / 4.0
    for k in range(lo, hi + 1):
        lhs = float(omega_x[k + 1 : 2 * k + 1].min()) - omega_star
        rhs = math.exp(-rate * k ** (1.0 - alpha)) * D * D
        n += 1
        if _violates(lhs, rhs, rel_slack):
            violations.append((k, lhs, rhs))
    return BoundReport("linear_rate", dict(constants, beta=beta), (lo, hi), n, violations)


def check_alpha1_outer(
    omega_y: np.ndarray,
    omega_star: float,
    constants: dict,
    k_range: Optional[Tuple[int, int]] = None,
    rel_slack: float = DEFAULT_REL_SLACK,
) -> BoundReport:
    """Running-best outer gap at alpha = 1 against ``D^2 / (2c (ln(k+1) - 1))``.

    Only iterations with a positive denominator participate; the running
    best ranges over ``1 <= j <= k``.
    """
    alpha, c, D = constants["alpha"], constants["c"], constants["D"]
    if alpha != 1.0:
        raise ValueError("this bound applies only at alpha = 1")
    last = omega_y.size - 1
    if last < 1:
        raise ValueError("trace too short")
    run_min = np.minimum.accumulate(omega_y[1:])  # run_min[k-1] = min over j in [1, k]
    lo, hi = k_range if k_range is not None else (1, last)
    lo = max(lo, 1)
    hi = min(hi, last)
    violations = []
    n = 0
    for k in range(lo, hi + 1):
        denom = math.log(k + 1.0) - 1.0
        if denom <= 0:
            continue
        lhs = float(run_min[k - 1]) - omega_star
        rhs = D * D / (2.0 * c * denom)
        n += 1
        if _violates(lhs, rhs, rel_slack):
            violations.append((k, lhs, rhs))
    return BoundReport("alpha1_outer", constants, (lo, hi), n, violations)


def verify_bound(
    trace: Trace,
    bound: str,
    reference: Reference,
    k_range: Optional[Tuple[int, int]] = None,
    rel_slack: float = DEFAULT_REL_SLACK,
    lipschitz_grad: Optional[float] = None,
    beta: Optional[float] = None,
) -> BoundReport:
    """Check one rate bound on a finished run.

    ``reference`` supplies the optimal values (``phi_star`` for the inner
    bound, ``omega_star`` for the outer ones).  The trace must carry
    reference distances (run with ``reference_point=...``) so that ``D1`` is
    measurable.  ``lipschitz_grad`` sharpens the curvature ceiling for
    backtracking runs; ``beta`` is required for the geometric bound.
    """
    if bound not in BOUND_KINDS:
        raise ValueError(f"unknown bound {bound!r}; known: {BOUND_KINDS}")
    constants = assemble_constants(trace, lipschitz_grad)
    if bound == "inner_rate":
        if reference.phi_star is None:
            raise ValueError("inner_rate needs reference.phi_star")
        gaps = trace.phi_y - reference.phi_star
        return check_inner_rate(gaps, constants, k_range, rel_slack)
    if reference.omega_star is None:
        raise ValueError(f"{bound} needs reference.omega_star")
    if bound == "outer_rate":
        return check_outer_rate(trace.omega_y, reference.omega_star, constants, k_range, rel_slack)
    if bound == "linear_rate":
        if beta is None:
            raise ValueError("linear_rate needs beta (strong-convexity modulus)")
        return check_linear_rate(trace.omega_x, reference.omega_star, constants, beta,
                                 k_range, rel_slack)
    return check_alpha1_outer(trace.omega_y, reference.omega_star, constants, k_range, rel_slack)

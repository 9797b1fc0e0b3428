"""Proximal toolkit: closed-form proxes, prox-gradient mappings, step rules.

Closed forms are provided as plain ``(t, x)`` functions plus bundled
:class:`~bisolve.problems.ProxFriendlyFn` factories that attach values and
deterministic sub-gradient selectors.  The module also houses the
prox-gradient mapping, the gradient mapping, backtracking step-size search,
and the smoothed-envelope gradient used by the envelope baseline.

Everything here is pure except :class:`StepSizeRule`, which carries the last
accepted curvature estimate between iterations; use one rule object per
solver run.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from .problems import CompositeObjective, ProxFriendlyFn, SmoothConvexFn

__all__ = [
    "prox_l1",
    "prox_sq_l2",
    "prox_elastic_net",
    "prox_indicator_box",
    "prox_indicator_ball",
    "prox_zero",
    "l1_fn",
    "sq_l2_fn",
    "elastic_net_fn",
    "box_indicator_fn",
    "ball_indicator_fn",
    "zero_fn",
    "sq_l2_smooth_fn",
    "zero_smooth_fn",
    "prox_grad_map",
    "grad_map",
    "StepSizeRule",
    "backtrack",
    "moreau_env_grad",
]


# ---------------------------------------------------------------------------
# closed-form proximal operators
# ---------------------------------------------------------------------------

def _soft_threshold(x: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def prox_l1(t: float, x: np.ndarray, weight: float = 1.0) -> np.ndarray:
    """Prox of ``weight * ||.||_1``: soft threshold at ``t * weight``."""
    _check_step(t)
    return _soft_threshold(np.asarray(x, dtype=float), t * weight)


def prox_sq_l2(t: float, x: np.ndarray, mu: float = 1.0) -> np.ndarray:
    """Prox of ``mu * ||.||_2^2``: shrinkage ``x / (1 + 2 t mu)``."""
    _check_step(t)
    return np.asarray(x, dtype=float) / (1.0 + 2.0 * t * mu)


def prox_elastic_net(t: float, x: np.ndarray, l1: float = 1.0, mu: float = 0.05) -> np.ndarray:
    """Prox of ``l1 * ||.||_1 + mu * ||.||_2^2``: soft threshold, then scale."""
    _check_step(t)
    return _soft_threshold(np.asarray(x, dtype=float), t * l1) / (1.0 + 2.0 * t * mu)


def prox_indicator_box(t: float, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Prox of the box indicator: componentwise clip onto ``[lo, hi]``."""
    _check_step(t)
    if lo > hi:
        raise ValueError("empty box")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def prox_indicator_ball(t: float, x: np.ndarray, radius: float, center=None) -> np.ndarray:
    """Prox of the Euclidean-ball indicator: radial projection."""
    _check_step(t)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = np.asarray(x, dtype=float)
    c = np.zeros_like(x) if center is None else np.asarray(center, dtype=float)
    d = x - c
    nrm = float(np.linalg.norm(d))
    if nrm <= radius:
        return x.copy()
    return c + (radius / nrm) * d


def prox_zero(t: float, x: np.ndarray) -> np.ndarray:
    """Prox of the zero function: the identity."""
    _check_step(t)
    return np.asarray(x, dtype=float).copy()


def _check_step(t: float):
    if t <= 0:
        raise ValueError(f"step size must be positive, got {t}")


# ---------------------------------------------------------------------------
# bundled function objects
# ---------------------------------------------------------------------------

def l1_fn(weight: float = 1.0) -> ProxFriendlyFn:
    """Weighted l1-norm with sign-based sub-gradient selector (0 at kinks)."""
    return ProxFriendlyFn(
        eval_fn=lambda x: weight * float(np.abs(x).sum()),
        prox_fn=lambda t, x: prox_l1(t, x, weight),
        subgrad_fn=lambda x: weight * np.sign(x),
        name=f"{weight}*l1" if weight != 1.0 else "l1",
    )


def sq_l2_fn(mu: float = 1.0) -> ProxFriendlyFn:
    """``mu * ||.||_2^2`` as a prox-friendly object (it is also smooth)."""
    return ProxFriendlyFn(
        eval_fn=lambda x: mu * float(x @ x),
        prox_fn=lambda t, x: prox_sq_l2(t, x, mu),
        subgrad_fn=lambda x: 2.0 * mu * np.asarray(x, dtype=float),
        name=f"{mu}*sq_l2",
    )


def elastic_net_fn(l1: float = 1.0, mu: float = 0.05) -> ProxFriendlyFn:
    """``l1 * ||.||_1 + mu * ||.||_2^2`` with selector ``l1*sign(x) + 2*mu*x``."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return l1 * float(np.abs(x).sum()) + mu * float(x @ x)

    return ProxFriendlyFn(
        eval_fn=value,
        prox_fn=lambda t, x: prox_elastic_net(t, x, l1, mu),
        subgrad_fn=lambda x: l1 * np.sign(x) + 2.0 * mu * np.asarray(x, dtype=float),
        name=f"elastic_net({l1},{mu})",
    )


def box_indicator_fn(lo: float, hi: float) -> ProxFriendlyFn:
    """Indicator of ``[lo, hi]^n``; selector returns 0 on feasible points."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.0 if bool(np.all((x >= lo) & (x <= hi))) else math.inf

    def subgrad(x):
        if value(x) == math.inf:
            raise ValueError("sub-differential is empty outside the box")
        return np.zeros_like(np.asarray(x, dtype=float))

    return ProxFriendlyFn(
        eval_fn=value,
        prox_fn=lambda t, x: prox_indicator_box(t, x, lo, hi),
        subgrad_fn=subgrad,
        name=f"box[{lo},{hi}]",
    )


def ball_indicator_fn(radius: float, center=None) -> ProxFriendlyFn:
    """Indicator of the Euclidean ball; selector returns 0 on feasible points."""

    def value(x):
        x = np.asarray(x, dtype=float)
        c = np.zeros_like(x) if center is None else np.asarray(center, dtype=float)
        return 0.0 if float(np.linalg.norm(x - c)) <= radius * (1 + 1e-12) else math.inf

    def subgrad(x):
        if value(x) == math.inf:
            raise ValueError("sub-differential is empty outside the ball")
        return np.zeros_like(np.asarray(x, dtype=float))

    return ProxFriendlyFn(
        eval_fn=value,
        prox_fn=lambda t, x: prox_indicator_ball(t, x, radius, center),
        subgrad_fn=subgrad,
        name=f"ball({radius})",
    )


def zero_fn() -> ProxFriendlyFn:
    """The zero function; prox is the identity."""
    return ProxFriendlyFn(
        eval_fn=lambda x: 0.0,
        prox_fn=prox_zero,
        subgrad_fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        name="zero",
        is_zero=True,
    )


def sq_l2_smooth_fn(mu: float = 0.5) -> SmoothConvexFn:
    """``mu * ||.||_2^2`` as a smooth function: gradient ``2*mu*x``, L = beta = 2*mu."""
    return SmoothConvexFn(
        eval_fn=lambda x: mu * float(x @ x),
        grad_fn=lambda x: 2.0 * mu * np.asarray(x, dtype=float),
        lipschitz_grad=2.0 * mu,
        strong_convexity=2.0 * mu,
        name=f"{mu}*sq_l2",
    )


def zero_smooth_fn() -> SmoothConvexFn:
    """The zero function as a smooth part (L = 0)."""
    return SmoothConvexFn(
        eval_fn=lambda x: 0.0,
        grad_fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lipschitz_grad=0.0,
        name="zero",
    )


# ---------------------------------------------------------------------------
# prox-gradient machinery
# ---------------------------------------------------------------------------

def prox_grad_map(obj: CompositeObjective, t: float, x: np.ndarray) -> np.ndarray:
    """One proximal-gradient step: ``prox_{t g}(x - t grad f(x))``."""
    _check_step(t)
    x = np.asarray(x, dtype=float)
    return obj.nonsmooth.prox(t, x - t * obj.smooth.grad(x))


def grad_map(obj: CompositeObjective, t: float, x: np.ndarray) -> np.ndarray:
    """Gradient mapping ``(x - prox_grad_map(x)) / t``; vanishes exactly at minimizers."""
    _check_step(t)
    x = np.asarray(x, dtype=float)
    return (x - prox_grad_map(obj, t, x)) / t


class StepSizeRule:
    """Step-size policy for the inner prox-gradient step.

    Two modes:

    * ``constant``: every iteration uses curvature estimate ``L`` (step 1/L).
    * ``backtracking``: warm-started doubling search with parameters
      ``gamma > 0`` (initial estimate) and ``eta > 1`` (growth factor); the
      accepted estimate never decreases between iterations and stays in
      ``[gamma, max(L_f * eta, gamma)]``.

    A rule instance is the only stateful object in this module; do not share
    one across concurrent solver runs.
    """

    def __init__(self, mode: str, L: float = None, gamma: float = None, eta: float = None):
        if mode not in ("constant", "backtracking"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        if mode == "constant":
            if L is None or L <= 0:
                raise ValueError("constant mode needs L > 0")
            self.L = float(L)
            self.last_L = float(L)
        else:
            if gamma is None or gamma <= 0:
                raise ValueError("backtracking mode needs gamma > 0")
            if eta is None or eta <= 1:
                raise ValueError("backtracking mode needs eta > 1")
            self.gamma = float(gamma)
            self.eta = float(eta)
            self.last_L = float(gamma)

    @classmethod
    def constant(cls, L: float) -> "StepSizeRule":
        return cls("constant", L=L)

    @classmethod
    def backtracking(cls, gamma: float, eta: float) -> "StepSizeRule":
        return cls("backtracking", gamma=gamma, eta=eta)

    def reset(self):
        if self.mode == "backtracking":
            self.last_L = self.gamma

    def upper_bound(self, lipschitz_grad: Optional[float] = None) -> Optional[float]:
        """Theoretical upper bound on emitted estimates, when computable."""
        if self.mode == "constant":
            return self.L
        if lipschitz_grad is not None:
            return max(lipschitz_grad * self.eta, self.gamma)
        return None

    def step(self, obj: CompositeObjective, x: np.ndarray) -> Tuple[float, np.ndarray]:
        """Return ``(L_k, y)`` with ``y`` the accepted prox-gradient point."""
        if self.mode == "constant":
            return self.L, prox_grad_map(obj, 1.0 / self.L, x)
        return backtrack(obj, self, x)

    def __repr__(self):
        if self.mode == "constant":
            return f"StepSizeRule.constant({self.L})"
        return f"StepSizeRule.backtracking(gamma={self.gamma}, eta={self.eta})"


_MAX_BACKTRACKS = 60


def backtrack(
    obj: CompositeObjective,
    rule: StepSizeRule,
    x: np.ndarray,
    coefficient: str = "lipschitz",
) -> Tuple[float, np.ndarray]:
    """Warm-started doubling search for an admissible curvature estimate.

    Starting from the previously accepted estimate, multiply by ``eta`` until
    ``f(y) <= f(x) + <grad f(x), y - x> + (L/2) ||y - x||^2`` holds for
    ``y = prox_{g/L}(x - grad f(x)/L)``, then record and return ``(L, y)``.

    ``coefficient`` selects the quadratic term: ``"lipschitz"`` uses
    ``L/2`` (the form whose acceptance is guaranteed once ``L >= L_f``);
    ``"inverse"`` uses ``1/(2L)`` and exists only so tests can demonstrate
    that the latter form need not terminate below ``L_f * eta``.
    """
    if rule.mode != "backtracking":
        raise ValueError("backtrack() requires a rule in backtracking mode")
    if coefficient not in ("lipschitz", "inverse"):
        raise ValueError(f"unknown coefficient form {coefficient!r}")

    x = np.asarray(x, dtype=float)
    f = obj.smooth
    fx = f(x)
    gx = f.grad(x)
    # float guard on a non-strict inequality; the test-only inverse form runs
    # bare so its non-termination stays observable
    slack = 1e-12 * max(1.0, abs(fx)) if coefficient == "lipschitz" else 0.0

    L = rule.last_L
    for _ in range(_MAX_BACKTRACKS + 1):
        t = 1.0 / L
        y = obj.nonsmooth.prox(t, x - t * gx)
        d = y - x
        quad = 0.5 * L if coefficient == "lipschitz" else 0.5 / L
        if f(y) <= fx + float(gx @ d) + quad * float(d @ d) + slack:
            rule.last_L = L
            return L, y
        L *= rule.eta
    raise ArithmeticError(
        f"backtracking failed to terminate within {_MAX_BACKTRACKS} growth steps; "
        "the smooth oracle is inconsistent with its gradient"
    )


def moreau_env_grad(h: ProxFriendlyFn, delta: float, x: np.ndarray) -> np.ndarray:
    """Gradient of the smoothed envelope of ``h`` at smoothing level ``delta``.

    Equals ``(x - h.prox(delta, x)) / delta`` and is ``1/delta``-Lipschitz.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    x = np.asarray(x, dtype=float)
    return (x - h.prox(delta, x)) / delta

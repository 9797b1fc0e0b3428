"""Function abstractions and problem containers.

The inner problem is a composite ``phi = f + g`` with a smooth convex ``f``
and a prox-friendly (possibly extended-valued) convex ``g``.  The outer
problem minimizes a convex coercive function over the inner solution set,
supplied either as a bare sub-gradient oracle or in composite
``sigma + psi`` form.

Extended values: an infeasible indicator evaluates to ``math.inf`` (a true
IEEE infinity, never a large finite float); sums and comparisons propagate
it.  All function objects are immutable after construction and their oracles
must be pure, so instances can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .quasi_lipschitz import QLConstants

__all__ = [
    "SmoothConvexFn",
    "ProxFriendlyFn",
    "CompositeObjective",
    "SubgradientOuter",
    "CompositeOuter",
    "Reference",
    "BilevelInstance",
    "eval_composite",
    "regularized_objective",
    "bregman_linearization_gap",
]

Array = np.ndarray


def _check_finite(x: Array, what: str = "point") -> Array:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be finite, got {x}")
    return x


class SmoothConvexFn:
    """Convex function with value and gradient oracles.

    Parameters
    ----------
    eval_fn : callable
        Maps a point to a float.
    grad_fn : callable
        Maps a point to the gradient vector.
    lipschitz_grad : float or None
        Lipschitz constant of the gradient, ``None`` when unknown.
    strong_convexity : float
        Strong-convexity modulus; 0 means merely convex.
    """

    def __init__(self, eval_fn, grad_fn, lipschitz_grad=None, strong_convexity=0.0, name=""):
        if lipschitz_grad is not None and lipschitz_grad < 0:
            raise ValueError("lipschitz_grad must be nonnegative")
        if strong_convexity < 0:
            raise ValueError("strong_convexity must be nonnegative")
        self._eval = eval_fn
        self._grad = grad_fn
        self.lipschitz_grad = lipschitz_grad
        self.strong_convexity = float(strong_convexity)
        self.name = name

    def __call__(self, x: Array) -> float:
        return float(self._eval(x))

    def grad(self, x: Array) -> Array:
        return np.asarray(self._grad(x), dtype=float)

    def __repr__(self):
        return f"SmoothConvexFn({self.name or 'anon'}, L={self.lipschitz_grad}, beta={self.strong_convexity})"


class ProxFriendlyFn:
    """Convex function with value, prox and sub-gradient-selector oracles.

    ``eval_fn`` may return ``inf`` (indicator-style functions).  ``prox_fn``
    takes ``(t, x)`` with step size ``t > 0`` and returns the proximal point.
    ``subgrad_fn`` is a deterministic selection from the sub-differential;
    selectors pick a fixed element at kinks (e.g. 0 on zero coordinates of
    the l1-norm) so that runs are reproducible.
    """

    def __init__(self, eval_fn, prox_fn, subgrad_fn=None, name="", is_zero=False):
        self._eval = eval_fn
        self._prox = prox_fn
        self._subgrad = subgrad_fn
        self.name = name
        self.is_zero = bool(is_zero)

    def __call__(self, x: Array) -> float:
        return float(self._eval(x))

    def prox(self, t: float, x: Array) -> Array:
        if t <= 0:
            raise ValueError(f"prox step size must be positive, got {t}")
        return np.asarray(self._prox(t, x), dtype=float)

    def subgrad(self, x: Array) -> Array:
        if self._subgrad is None:
            raise NotImplementedError(f"no sub-gradient selector for {self.name or 'this function'}")
        return np.asarray(self._subgrad(x), dtype=float)

    @property
    def has_subgrad(self) -> bool:
        return self._subgrad is not None

    def __repr__(self):
        return f"ProxFriendlyFn({self.name or 'anon'})"


@dataclass(frozen=True)
class CompositeObjective:
    """Sum of a smooth and a prox-friendly part, ``phi = smooth + nonsmooth``."""

    smooth: SmoothConvexFn
    nonsmooth: ProxFriendlyFn

    def __call__(self, x: Array) -> float:
        return self.smooth(x) + self.nonsmooth(x)


@dataclass(frozen=True)
class SubgradientOuter:
    """Outer objective handled through a sub-gradient oracle.

    ``ql`` declares growth-bound constants for the selector; they feed the
    boundedness checks and the regularization baseline's step sizing.
    """

    omega: ProxFriendlyFn
    ql: QLConstants

    def value(self, x: Array) -> float:
        return self.omega(x)


@dataclass(frozen=True)
class CompositeOuter:
    """Outer objective in composite form ``sigma + psi``.

    ``sigma`` must carry a known gradient Lipschitz constant; it caps the
    admissible outer step coefficient.  ``ql`` optionally declares growth
    constants for sub-gradients of ``sigma + psi`` (baselines use them for
    step sizing when present).
    """

    sigma: SmoothConvexFn
    psi: ProxFriendlyFn
    ql: Optional[QLConstants] = None

    def __post_init__(self):
        if self.sigma.lipschitz_grad is None:
            raise ValueError("composite outer mode needs sigma.lipschitz_grad")

    def value(self, x: Array) -> float:
        return self.sigma(x) + self.psi(x)


@dataclass(frozen=True)
class Reference:
    """Known solution data for testing: any subset may be present."""

    x_prime: Optional[Array] = None
    phi_star: Optional[float] = None
    omega_star: Optional[float] = None


OuterMode = Union[SubgradientOuter, CompositeOuter]


@dataclass(frozen=True)
class BilevelInstance:
    """Inner composite plus an outer objective over its solution set.

    The outer function must be real-valued on all of R^n (convex and
    coercive); indicator-style outers are not supported.  ``dim`` is the
    ambient dimension; solvers use it for the all-zeros default start.
    """

    inner: CompositeObjective
    outer: OuterMode
    dim: int
    reference: Optional[Reference] = None
    name: str = ""

    def outer_value(self, x: Array) -> float:
        return self.outer.value(x)

    def inner_value(self, x: Array) -> float:
        return self.inner(x)


def eval_composite(obj: CompositeObjective, x: Array) -> float:
    """Evaluate ``smooth(x) + nonsmooth(x)``; ``inf`` when ``x`` is infeasible for the nonsmooth part."""
    x = _check_finite(x)
    return obj(x)


def regularized_objective(
    obj: CompositeObjective,
    omega: ProxFriendlyFn,
    lam: float,
    combined: Optional[ProxFriendlyFn] = None,
) -> CompositeObjective:
    """Composite for ``phi + lam * omega``: smooth part ``f``, nonsmooth part ``g + lam * omega``.

    No automatic prox composition is attempted.  When ``g`` is the zero
    function the combined prox is exact via step rescaling
    (``prox_{t * lam * omega} = omega.prox(t * lam, .)``); otherwise the
    caller must pass ``combined``, a hand-written prox-friendly object for
    ``g + lam * omega``.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if combined is not None:
        return CompositeObjective(obj.smooth, combined)
    g = obj.nonsmooth
    if not g.is_zero:
        raise ValueError(
            "no closed-form prox for g + lam*omega with nonzero g; pass combined="
        )

    def scaled_subgrad(x, _om=omega, _lam=lam):
        return _lam * _om.subgrad(x)

    merged = ProxFriendlyFn(
        eval_fn=lambda x: lam * omega(x),
        prox_fn=lambda t, x: omega.prox(t * lam, x),
        subgrad_fn=scaled_subgrad if omega.has_subgrad else None,
        name=f"{lam}*{omega.name or 'omega'}",
    )
    return CompositeObjective(obj.smooth, merged)


def bregman_linearization_gap(s: SmoothConvexFn, y: Array, x: Array) -> float:
    """Gap ``s(y) - s(x) - <grad s(x), y - x>`` between ``s`` and its linearization at ``x``.

    Nonnegative for convex ``s``; at least ``(beta/2) ||y - x||^2`` when
    ``s`` is ``beta``-strongly convex.  Test suites use it as a convexity
    certificate.
    """
    x = _check_finite(x)
    y = _check_finite(y)
    return s(y) - s(x) - float(s.grad(x) @ (y - x))

"""Growth-bound calculus for vector mappings.

A mapping ``F`` is *quasi Lipschitz* with constants ``(d1, d2)`` when
``||F(x)|| <= max(d1, d2 * ||x||)`` for every ``x``.  The class covers both
bounded mappings (``d2 = 0``) and Lipschitz-at-scale mappings (``d1 = 0``),
and is closed under the algebra implemented here.  Constants produced by the
algebra are safe but not necessarily tight.

The module also ships :func:`ql_certify`, an empirical falsifier that hunts
for a sampled violation of the bound.  A "certified" outcome is evidence,
never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "QLConstants",
    "ql_scale",
    "ql_sum",
    "ql_compose",
    "ql_linear_precompose",
    "ql_chain_rule",
    "ql_from_lipschitz_map",
    "ql_from_global_lipschitz",
    "mixture_sampler",
    "ql_certify",
]


@dataclass(frozen=True)
class QLConstants:
    """Growth-bound pair ``(d1, d2)``; both entries must be nonnegative.

    Any componentwise-larger pair is also valid for the same mapping, so
    these values behave like an upper estimate, not an identity.
    """

    d1: float
    d2: float

    def __post_init__(self):
        if self.d1 < 0 or self.d2 < 0:
            raise ValueError(f"constants must be nonnegative, got ({self.d1}, {self.d2})")

    def bound_at(self, radius: float) -> float:
        """Largest ``||F(x)||`` the pair allows on the ball of the given radius."""
        return max(self.d1, self.d2 * radius)


def ql_scale(q: QLConstants, a: float) -> QLConstants:
    """Constants for ``a * F`` given constants for ``F``."""
    return QLConstants(abs(a) * q.d1, abs(a) * q.d2)


def ql_sum(q1: QLConstants, q2: QLConstants) -> QLConstants:
    """Constants for ``F1 + F2`` given constants for the two summands."""
    return QLConstants(2.0 * (q1.d1 + q2.d1), 2.0 * (q1.d2 + q2.d2))


def ql_compose(q_outer: QLConstants, q_inner: QLConstants) -> QLConstants:
    """Constants for ``F1 o F2`` with ``q_outer`` for F1 and ``q_inner`` for F2."""
    return QLConstants(
        2.0 * (q_outer.d1 + q_outer.d2 * q_inner.d1),
        2.0 * q_outer.d2 * q_inner.d2,
    )


def ql_linear_precompose(q: QLConstants, op_norm: float) -> QLConstants:
    """Constants for ``F o A`` where ``A`` is linear with operator norm ``op_norm``."""
    if op_norm < 0:
        raise ValueError("operator norm must be nonnegative")
    return QLConstants(q.d1, q.d2 * op_norm)


def ql_chain_rule(L_psi: float, psi_at_zero: float, q_phi_prime: QLConstants) -> QLConstants:
    """Constants for sub-gradients of ``phi o psi``.

    ``psi`` is convex and globally ``L_psi``-Lipschitz, ``phi`` is scalar,
    non-decreasing and differentiable with a derivative whose growth bound is
    ``q_phi_prime``.  The classic instance is the squared l1-norm:
    ``psi = ||.||_1`` (L = sqrt(n), psi(0) = 0) with ``phi(t) = t^2``
    (derivative bound (0, 2)) yields ``(0, 4n)``.
    """
    if L_psi <= 0:
        raise ValueError("L_psi must be positive")
    L, d1, d2 = L_psi, q_phi_prime.d1, q_phi_prime.d2
    return QLConstants(2.0 * (L * d1 + L * d2 * abs(psi_at_zero)), 2.0 * L * L * d2)


def ql_from_lipschitz_map(L: float, norm_at_zero: float) -> QLConstants:
    """Constants ``(2 ||T(0)||, 2L)`` for a globally ``L``-Lipschitz mapping ``T``."""
    if L < 0 or norm_at_zero < 0:
        raise ValueError("arguments must be nonnegative")
    return QLConstants(2.0 * norm_at_zero, 2.0 * L)


def ql_from_global_lipschitz(L: float) -> QLConstants:
    """Constants ``(L, 0)`` for sub-gradients of a globally ``L``-Lipschitz convex function."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    return QLConstants(L, 0.0)


# Radii probing both regimes of the bound: d1 rules near the origin,
# d2 * ||x|| far from it.
_SPHERE_RADII = (1e-3, 1.0, 10.0, 1e3)


def mixture_sampler(dim: int, seed: int) -> Callable[[], np.ndarray]:
    """Point source for :func:`ql_certify`.

    Draws cycle through uniform points on spheres of radii 1e-3, 1, 10 and
    1e3 plus standard Gaussian vectors, all from one seeded generator.
    """
    rng = np.random.default_rng(seed)
    state = {"i": 0}

    def draw() -> np.ndarray:
        i = state["i"]
        state["i"] = i + 1
        v = rng.standard_normal(dim)
        which = i % (len(_SPHERE_RADII) + 1)
        if which == len(_SPHERE_RADII):
            return v
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            v = np.ones(dim)
            nrm = math.sqrt(dim)
        return (_SPHERE_RADII[which] / nrm) * v

    return draw


def ql_certify(
    F: Callable[[np.ndarray], np.ndarray],
    q: QLConstants,
    sampler: Callable[[], np.ndarray],
    n_samples: int,
    rel_tol: float = 1e-9,
) -> Optional[np.ndarray]:
    """Search sampled points for a violation of the growth bound.

    Returns the first sampled ``x`` with
    ``||F(x)|| > max(d1, d2 ||x||) * (1 + rel_tol)``, or ``None`` when every
    sample satisfies the bound ("certified").  The relative tolerance absorbs
    floating-point slack on what is mathematically a non-strict inequality.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    for _ in range(n_samples):
        x = sampler()
        fx = np.asarray(F(x), dtype=float)
        if np.linalg.norm(fx) > q.bound_at(float(np.linalg.norm(x))) * (1.0 + rel_tol):
            return x
    return None

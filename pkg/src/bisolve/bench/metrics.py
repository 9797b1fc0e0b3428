"""Metric extraction: gap series, reference optimal values, rate fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..problems import CompositeObjective
from ..solvers import Trace

__all__ = [
    "GapSeries",
    "compute_phi_gap",
    "PhiStarResult",
    "phi_star_oracle",
    "RateFit",
    "fit_rate",
    "harmonic_sum_bound",
]


@dataclass(frozen=True)
class GapSeries:
    """Inner optimality gaps along a trace, clamped at zero."""

    k: np.ndarray
    time_s: np.ndarray
    gap: np.ndarray
    clamped: bool  # True when a gap below -1e-12 was clamped (stale reference value)


def compute_phi_gap(trace: Trace, phi_star: float) -> GapSeries:
    """Per-iteration series ``phi(y^k) - phi_star``.

    Gaps in [-1e-12, 0) are treated as floating-point noise and clamped;
    gaps in [-1e-9, -1e-12) are clamped but flag the series, since they
    suggest a stale reference value; anything below -1e-9 raises.
    """
    if not math.isfinite(phi_star):
        raise ValueError("phi_star must be finite")
    gaps = trace.phi_y - phi_star
    worst = float(gaps.min()) if gaps.size else 0.0
    if worst < -1e-9:
        raise ValueError(
            f"gap {worst:.3e} below -1e-9: phi_star is inconsistent with the trace"
        )
    clamped = worst < -1e-12
    return GapSeries(
        k=trace.k.copy(),
        time_s=trace.wall_time.copy(),
        gap=np.maximum(gaps, 0.0),
        clamped=clamped,
    )


@dataclass(frozen=True)
class PhiStarResult:
    """High-accuracy inner optimum estimate with its accuracy certificate."""

    value: float
    certificate: float  # gradient-mapping norm at the returned point
    iterations: int
    x: np.ndarray

    @property
    def low_accuracy(self) -> bool:
        return not self.certificate < 1e-8


def phi_star_oracle(
    obj: CompositeObjective,
    x0: np.ndarray,
    budget: int = 100_000,
    g_tol: float = 1e-11,
) -> PhiStarResult:
    """Estimate the inner optimal value by an accelerated prox-gradient run.

    Momentum restarts on objective increase keep the quadratic instances
    fast.  Returns the best value seen plus the gradient-mapping norm at the
    best point; a certificate at or above 1e-8 marks the result low-accuracy
    (a warning is emitted, and ``low_accuracy`` is set).
    """
    L = obj.smooth.lipschitz_grad
    if L is None or L <= 0:
        raise ValueError("oracle needs a known positive gradient Lipschitz constant")
    t = 1.0 / L
    f, g = obj.smooth, obj.nonsmooth

    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    momentum = 1.0
    val_x = obj(x)
    best_val = val_x
    best_x = x.copy()
    iterations = 0

    for k in range(budget):
        iterations = k + 1
        x_new = g.prox(t, y - t * f.grad(y))
        res = float(np.linalg.norm(y - x_new)) / t  # gradient mapping at y
        val = obj(x_new)
        if val < best_val:
            best_val = val
            best_x = x_new.copy()
        if res <= g_tol:
            x = x_new
            break
        if val > val_x:  # restart: drop momentum when the objective backslides
            y = x_new.copy()
            momentum = 1.0
        else:
            momentum_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum * momentum))
            y = x_new + ((momentum - 1.0) / momentum_new) * (x_new - x)
            momentum = momentum_new
        x = x_new
        val_x = val

    p = g.prox(t, best_x - t * f.grad(best_x))
    certificate = float(np.linalg.norm(best_x - p)) / t
    result = PhiStarResult(value=best_val, certificate=certificate,
                           iterations=iterations, x=best_x)
    if result.low_accuracy:
        warnings.warn(
            f"inner-optimum oracle stopped with certificate {certificate:.2e} >= 1e-8",
            RuntimeWarning,
            stacklevel=2,
        )
    return result


@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fit ``value ~ k^slope``."""

    slope: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]


def fit_rate(
    k: np.ndarray,
    values: np.ndarray,
    window: Optional[Tuple[float, float]] = None,
) -> RateFit:
    """Ordinary least squares of ``log(value)`` on ``log(k)`` over a window.

    ``window=None`` uses ``[k_max/10, k_max]`` to skip transients.  All
    values inside the window must be positive and the window must contain at
    least 10 points.
    """
    k = np.asarray(k, dtype=float)
    values = np.asarray(values, dtype=float)
    if k.shape != values.shape:
        raise ValueError("k and values must have matching shapes")
    positive_k = k > 0
    k, values = k[positive_k], values[positive_k]
    if k.size == 0:
        raise ValueError("no positive iteration indices to fit")
    if window is None:
        window = (float(k.max()) / 10.0, float(k.max()))
    lo, hi = window
    sel = (k >= lo) & (k <= hi)
    if int(sel.sum()) < 10:
        raise ValueError(f"window {window} contains {int(sel.sum())} points, need at least 10")
    kw, vw = k[sel], values[sel]
    if np.any(vw <= 0):
        raise ValueError("rate fit needs strictly positive values inside the window")

    lx, ly = np.log(kw), np.log(vw)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-20 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), (lo, hi))


def harmonic_sum_bound(n1: int, n2: int, r: float) -> float:
    """Closed-form upper bound on ``sum_{n=n1}^{n2} n^(-r)``.

    Valid for integer ``1 <= n1 <= n2`` with ``0 < r < 1``, and for ``r > 1``
    when additionally ``n1 >= 2``; other parameter combinations raise.
    """
    if n1 > n2:
        raise ValueError(f"need n1 <= n2, got ({n1}, {n2})")
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    if 0.0 < r < 1.0:
        pass
    elif r > 1.0:
        if n1 < 2:
            raise ValueError(f"r > 1 needs n1 >= 2, got n1 = {n1}")
    else:
        raise ValueError(f"r must lie in (0, 1) or (1, inf), got {r}")
    return (n2 ** (1.0 - r) - (n1 - 1) ** (1.0 - r)) / (1.0 - r)

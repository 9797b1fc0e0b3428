"""Bi-sub-gradient solver, iterate selectors, and baseline methods.

One solver run is strictly sequential; configs and instances are read-only
during a run, so parameter sweeps may execute runs concurrently as long as
each run gets its own trace.  Step rules are cloned internally, which keeps
a config reusable across runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .problems import BilevelInstance, CompositeOuter, ProxFriendlyFn, SubgradientOuter
from .prox import StepSizeRule, moreau_env_grad

__all__ = [
    "SolverConfig",
    "Trace",
    "eta_schedule",
    "bisg_step_v1",
    "bisg_step_v2",
    "run_bisg",
    "reference_solution",
    "select_k_best",
    "select_k_tilde",
    "run_bigsam_envelope",
    "run_iterative_regularization",
    "default_mix_schedule",
]


@dataclass
class SolverConfig:
    """Run parameters shared by the solver and the baselines.

    ``alpha`` in (1/2, 1] and ``c`` in (0, 1] shape the outer step schedule
    ``eta_k = c (k+1)^(-alpha)``.  ``alpha = 1/2`` is rejected: the
    boundedness guarantee that the rate checks rely on needs ``alpha > 1/2``.
    """

    alpha: float
    step_rule: StepSizeRule
    c: float = 1.0
    max_iter: int = 1000
    time_budget: Optional[float] = None
    seed: int = 0
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1], got {self.alpha}")
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")

    def start_point(self, dim: int) -> np.ndarray:
        if self.x0 is not None:
            return np.asarray(self.x0, dtype=float).copy()
        return np.zeros(dim)


def eta_schedule(cfg: SolverConfig, k: int) -> float:
    """Outer step size ``c * (k+1)^(-alpha)`` at iteration ``k >= 0``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return cfg.c * (k + 1.0) ** (-cfg.alpha)


@dataclass
class Trace:
    """Per-iteration record of a run.

    Row ``j`` holds the state entering iteration ``j``: the iterate ``x^j``,
    the inner-step point ``y^j``, objective values at both, the outer-step
    vector norm, and the accepted curvature estimate.  ``dist_x``/``dist_y``
    are distances to a reference point when one was supplied to the runner.
    ``wall_time`` is measured and therefore not covered by the bitwise
    determinism guarantee; every other column is.
    """

    method: str
    instance: str
    config: dict
    k: np.ndarray
    wall_time: np.ndarray
    phi_y: np.ndarray
    omega_y: np.ndarray
    omega_x: np.ndarray
    step_norm: np.ndarray
    L_k: np.ndarray
    final_x: np.ndarray
    final_y: np.ndarray
    dist_x: Optional[np.ndarray] = None
    dist_y: Optional[np.ndarray] = None
    xs: Optional[np.ndarray] = None
    ys: Optional[np.ndarray] = None
    incomplete: bool = False
    error: Optional[str] = None

    def __len__(self) -> int:
        return int(self.k.size)

    @property
    def d1(self) -> float:
        """Largest observed distance of the x-iterates to the reference point."""
        if self.dist_x is None:
            raise ValueError("trace has no reference distances; rerun with reference_point")
        return float(self.dist_x.max())

    @property
    def d2(self) -> float:
        """Largest observed outer-step vector norm."""
        return float(self.step_norm.max())


class _Recorder:
    """Preallocated column store for one run."""

    def __init__(self, method, instance_name, config, max_iter, dim, with_dist, store_points):
        self.method = method
        self.instance_name = instance_name
        self.config = config
        n = max_iter
        self.k = np.empty(n, dtype=np.int64)
        self.wall_time = np.empty(n)
        self.phi_y = np.empty(n)
        self.omega_y = np.empty(n)
        self.omega_x = np.empty(n)
        self.step_norm = np.empty(n)
        self.L_k = np.empty(n)
        self.dist_x = np.empty(n) if with_dist else None
        self.dist_y = np.empty(n) if with_dist else None
        self.xs = np.empty((n, dim)) if store_points else None
        self.ys = np.empty((n, dim)) if store_points else None
        self.rows = 0

    def push(self, k, t, phi_y, om_y, om_x, snorm, L, dx, dy, x, y):
        i = self.rows
        self.k[i] = k
        self.wall_time[i] = t
        self.phi_y[i] = phi_y
        self.omega_y[i] = om_y
        self.omega_x[i] = om_x
        self.step_norm[i] = snorm
        self.L_k[i] = L
        if self.dist_x is not None:
            self.dist_x[i] = dx
            self.dist_y[i] = dy
        if self.xs is not None:
            self.xs[i] = x
            self.ys[i] = y
        self.rows = i + 1

    def finish(self, final_x, final_y, incomplete=False, error=None) -> Trace:
        r = self.rows
        return Trace(
            method=self.method,
            instance=self.instance_name,
            config=self.config,
            k=self.k[:r].copy(),
            wall_time=self.wall_time[:r].copy(),
            phi_y=self.phi_y[:r].copy(),
            omega_y=self.omega_y[:r].copy(),
            omega_x=self.omega_x[:r].copy(),
            step_norm=self.step_norm[:r].copy(),
            L_k=self.L_k[:r].copy(),
            dist_x=None if self.dist_x is None else self.dist_x[:r].copy(),
            dist_y=None if self.dist_y is None else self.dist_y[:r].copy(),
            xs=None if self.xs is None else self.xs[:r].copy(),
            ys=None if self.ys is None else self.ys[:r].copy(),
            final_x=np.asarray(final_x, dtype=float).copy(),
            final_y=np.asarray(final_y, dtype=float).copy(),
            incomplete=incomplete,
            error=error,
        )


def _clone_rule(rule: StepSizeRule) -> StepSizeRule:
    if rule.mode == "constant":
        return StepSizeRule.constant(rule.L)
    return StepSizeRule.backtracking(rule.gamma, rule.eta)


def _check_v2_cap(inst: BilevelInstance, cfg: SolverConfig):
    L_sigma = inst.outer.sigma.lipschitz_grad
    cap = min(1.0 / L_sigma, 1.0) if L_sigma > 0 else 1.0
    if cfg.c > cap * (1.0 + 1e-12):
        raise ValueError(
            f"composite outer mode needs c <= min(1/L_sigma, 1) = {cap}, got c = {cfg.c}"
        )


def bisg_step_v1(inst: BilevelInstance, cfg: SolverConfig, k: int, x_k: np.ndarray):
    """One sub-gradient-outer iteration: inner prox-grad step, then ``y - eta_k * z``.

    Returns ``(y_k, x_next)``.  Uses and updates ``cfg.step_rule`` state.
    """
    if not isinstance(inst.outer, SubgradientOuter):
        raise ValueError("bisg_step_v1 needs a sub-gradient outer mode")
    _, y = cfg.step_rule.step(inst.inner, np.asarray(x_k, dtype=float))
    z = inst.outer.omega.subgrad(y)
    return y, y - eta_schedule(cfg, k) * z


def bisg_step_v2(inst: BilevelInstance, cfg: SolverConfig, k: int, x_k: np.ndarray):
    """One composite-outer iteration: inner prox-grad step, then an outer prox-grad step.

    Returns ``(y_k, x_next)`` with
    ``x_next = prox_{eta_k psi}(y_k - eta_k grad sigma(y_k))``; the implied
    outer-step vector is ``(y_k - x_next) / eta_k``.
    """
    if not isinstance(inst.outer, CompositeOuter):
        raise ValueError("bisg_step_v2 needs a composite outer mode")
    _check_v2_cap(inst, cfg)
    _, y = cfg.step_rule.step(inst.inner, np.asarray(x_k, dtype=float))
    eta = eta_schedule(cfg, k)
    w = y - eta * inst.outer.sigma.grad(y)
    return y, inst.outer.psi.prox(eta, w)


def run_bisg(
    inst: BilevelInstance,
    cfg: SolverConfig,
    variant: str,
    reference_point: Optional[np.ndarray] = None,
    store_points: bool = False,
    record: bool = True,
) -> Trace:
    """Run the bi-sub-gradient iteration from ``cfg.x0`` (zeros by default).

    ``variant`` is ``"v1"`` (sub-gradient outer) or ``"v2"`` (composite
    outer) and must match the instance's outer mode.  Stops at ``max_iter``
    or when the optional wall-clock budget is exhausted.  Oracle failures
    abort the run and return the partial trace flagged ``incomplete``.
    ``record=False`` skips all per-iteration bookkeeping (used for long
    surrogate-reference runs); the returned trace then has zero rows but
    valid final points.
    """
    variant = variant.lower()
    if variant == "v1":
        if not isinstance(inst.outer, SubgradientOuter):
            raise ValueError("variant v1 needs a sub-gradient outer mode")
    elif variant == "v2":
        if not isinstance(inst.outer, CompositeOuter):
            raise ValueError("variant v2 needs a composite outer mode")
        _check_v2_cap(inst, cfg)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    inner = inst.inner
    outer = inst.outer
    rule = _clone_rule(cfg.step_rule)
    x = cfg.start_point(inst.dim)
    ref = None if reference_point is None else np.asarray(reference_point, dtype=float)

    etas = cfg.c * np.arange(1.0, cfg.max_iter + 1.0) ** (-cfg.alpha)
    rec = _Recorder(
        f"bisg-{variant}", inst.name, _config_dict(cfg, variant=variant),
        cfg.max_iter if record else 0, inst.dim,
        with_dist=ref is not None, store_points=store_points and record,
    )

    t0 = time.perf_counter()
    y = x
    try:
        for k in range(cfg.max_iter):
            L_k, y = rule.step(inner, x)
            eta = etas[k]
            if variant == "v1":
                step_vec = outer.omega.subgrad(y)
                x_next = y - eta * step_vec
            else:
                w = y - eta * outer.sigma.grad(y)
                x_next = outer.psi.prox(eta, w)
                step_vec = (y - x_next) / eta
            if record:
                phi_y = inner(y)
                if not np.isfinite(phi_y):
                    return rec.finish(x, y, incomplete=True,
                                      error=f"non-finite inner value at iteration {k}")
                dx = dy = np.nan
                if ref is not None:
                    dx = float(np.linalg.norm(x - ref))
                    dy = float(np.linalg.norm(y - ref))
                rec.push(
                    k, time.perf_counter() - t0,
                    phi_y, outer.value(y), outer.value(x),
                    float(np.linalg.norm(step_vec)), L_k, dx, dy, x, y,
                )
            x = x_next
            if cfg.time_budget is not None and time.perf_counter() - t0 > cfg.time_budget:
                break
    except Exception as exc:  # oracle failure: keep the partial trace
        return rec.finish(x, y, incomplete=True, error=repr(exc))
    return rec.finish(x, y)


def reference_solution(
    inst: BilevelInstance,
    cfg: SolverConfig,
    variant: str,
    factor: int = 10,
    alpha: float = 0.95,
) -> np.ndarray:
    """Surrogate outer-optimal point: final iterate of a ``factor`` x longer run.

    Used when the true bi-level solution is unknown; bound checks against it
    are documented as surrogate-based.
    """
    long_cfg = SolverConfig(
        alpha=alpha, step_rule=cfg.step_rule, c=cfg.c,
        max_iter=cfg.max_iter * factor, seed=cfg.seed, x0=cfg.x0,
    )
    trace = run_bisg(inst, long_cfg, variant, record=False)
    if trace.incomplete:
        raise RuntimeError(f"reference run failed: {trace.error}")
    return trace.final_y


def select_k_best(trace: Trace, k: int) -> int:
    """Index of the smallest recorded outer value over iterations ``[k, 2k]``.

    Ties resolve to the smallest index.  The trace must contain iteration
    ``2k``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if 2 * k >= len(trace):
        raise IndexError(f"trace has {len(trace)} rows; window [{k}, {2 * k}] is out of range")
    window = trace.omega_y[k : 2 * k + 1]
    return k + int(np.argmin(window))


def select_k_tilde(trace: Trace, k: int) -> int:
    """Index of the smallest outer value over the x-iterates in ``[k+1, 2k]``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if 2 * k >= len(trace):
        raise IndexError(f"trace has {len(trace)} rows; window [{k + 1}, {2 * k}] is out of range")
    window = trace.omega_x[k + 1 : 2 * k + 1]
    return k + 1 + int(np.argmin(window))


def default_mix_schedule(k: int) -> float:
    """Vanishing convex-combination weight ``min(1, 2/(k+2))`` for the envelope baseline."""
    return min(1.0, 2.0 / (k + 2.0))


def _prox_friendly_outer(inst: BilevelInstance) -> ProxFriendlyFn:
    """Outer objective as a single prox-friendly object, when the mode allows it."""
    if isinstance(inst.outer, SubgradientOuter):
        return inst.outer.omega
    if inst.outer.sigma.lipschitz_grad == 0.0:
        return inst.outer.psi
    raise ValueError(
        "this baseline needs the outer objective as one prox-friendly function "
        "(sub-gradient mode, or composite mode with a zero smooth part)"
    )


def run_bigsam_envelope(
    inst: BilevelInstance,
    cfg: SolverConfig,
    delta: float,
    mix_schedule: Callable[[int], float] = default_mix_schedule,
    reference_point: Optional[np.ndarray] = None,
    store_points: bool = False,
) -> Trace:
    """Sequential-averaging baseline run on the smoothed outer objective.

    Per iteration: an inner prox-gradient point ``p_k``, an envelope-gradient
    step ``s_k = x_k - delta * envgrad(omega, delta, x_k)`` (step length
    ``delta``, the inverse of the envelope gradient's Lipschitz constant),
    and the convex combination ``x_{k+1} = mix_k s_k + (1 - mix_k) p_k``.
    Smoothing biases the limit: the run solves the smoothed bi-level problem,
    not the original one.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    omega = _prox_friendly_outer(inst)
    inner = inst.inner
    rule = _clone_rule(cfg.step_rule)
    x = cfg.start_point(inst.dim)
    ref = None if reference_point is None else np.asarray(reference_point, dtype=float)

    rec = _Recorder(
        f"bigsam-env(delta={delta:g})", inst.name,
        _config_dict(cfg, delta=delta), cfg.max_iter, inst.dim,
        with_dist=ref is not None, store_points=store_points,
    )
    t0 = time.perf_counter()
    try:
        for k in range(cfg.max_iter):
            L_k, p = rule.step(inner, x)
            env_grad = moreau_env_grad(omega, delta, x)
            s = x - delta * env_grad
            mix = mix_schedule(k)
            if not 0.0 <= mix <= 1.0:
                raise ValueError(f"mix schedule must stay in [0, 1], got {mix} at k={k}")
            x_next = mix * s + (1.0 - mix) * p
            phi_next = inner(x_next)
            if not np.isfinite(phi_next):
                return rec.finish(x, x_next, incomplete=True,
                                  error=f"non-finite inner value at iteration {k}")
            dx = dy = np.nan
            if ref is not None:
                dx = float(np.linalg.norm(x - ref))
                dy = float(np.linalg.norm(x_next - ref))
            rec.push(
                k, time.perf_counter() - t0,
                phi_next, inst.outer_value(x_next), inst.outer_value(x),
                float(np.linalg.norm(env_grad)), L_k, dx, dy, x, x_next,
            )
            x = x_next
            if cfg.time_budget is not None and time.perf_counter() - t0 > cfg.time_budget:
                break
    except Exception as exc:
        return rec.finish(x, x, incomplete=True, error=repr(exc))
    return rec.finish(x, x)


def default_lambda_schedule(k: int, lam0: float = 1.0) -> float:
    """Regularization weights ``lam0 / (k+1)``: vanishing with divergent sum."""
    return lam0 / (k + 1.0)


def run_iterative_regularization(
    inst: BilevelInstance,
    cfg: SolverConfig,
    lambda_schedule: Callable[[int], float] = default_lambda_schedule,
    omega_via_prox: bool = False,
    reference_point: Optional[np.ndarray] = None,
    store_points: bool = False,
) -> Trace:
    """Iterative-regularization baseline: one step per regularization weight.

    Each iteration takes a single prox-gradient step on the regularized
    objective ``phi + lam_k * omega`` with step
    ``1 / (L_f + lam_k * L_est)``, where ``L_est`` is a crude curvature
    estimate from the outer's declared growth constants over the current
    iterate ball.  By default the outer term enters through its sub-gradient
    selector and the prox handles ``g`` alone; with ``omega_via_prox=True``
    (available when ``g`` is zero) the prox absorbs ``g + lam_k * omega``
    exactly via step rescaling.
    """
    omega = _prox_friendly_outer(inst)
    ql = inst.outer.ql
    if ql is None:
        raise ValueError("iterative regularization needs declared outer growth constants")
    inner = inst.inner
    L_f = inner.smooth.lipschitz_grad
    if L_f is None:
        raise ValueError("iterative regularization needs a known inner gradient Lipschitz constant")
    if omega_via_prox and not inner.nonsmooth.is_zero:
        raise ValueError("omega_via_prox needs a zero nonsmooth inner part")

    x = cfg.start_point(inst.dim)
    ref = None if reference_point is None else np.asarray(reference_point, dtype=float)
    rec = _Recorder(
        "iter-reg", inst.name, _config_dict(cfg, omega_via_prox=omega_via_prox),
        cfg.max_iter, inst.dim, with_dist=ref is not None, store_points=store_points,
    )
    t0 = time.perf_counter()
    try:
        for k in range(cfg.max_iter):
            lam = lambda_schedule(k)
            if lam < 0 or (lam == 0 and lambda_schedule is default_lambda_schedule):
                raise ValueError(f"lambda schedule must be positive, got {lam} at k={k}")
            radius = max(1.0, float(np.linalg.norm(x)))
            # crude curvature proxy: declared sub-gradient ceiling over the current
            # ball, divided by its diameter (growth constants carry a factor-2 slack)
            L_est = ql.bound_at(radius) / (2.0 * radius)
            L_total = L_f + lam * L_est
            t = 1.0 / L_total
            if omega_via_prox and lam > 0:
                v = x - t * inner.smooth.grad(x)
                x_next = omega.prox(t * lam, v)
            else:
                direction = inner.smooth.grad(x)
                if lam > 0:
                    direction = direction + lam * omega.subgrad(x)
                x_next = inner.nonsmooth.prox(t, x - t * direction)
            phi_next = inner(x_next)
            if not np.isfinite(phi_next):
                return rec.finish(x, x_next, incomplete=True,
                                  error=f"non-finite inner value at iteration {k}")
            dx = dy = np.nan
            if ref is not None:
                dx = float(np.linalg.norm(x - ref))
                dy = float(np.linalg.norm(x_next - ref))
            rec.push(
                k, time.perf_counter() - t0,
                phi_next, inst.outer_value(x_next), inst.outer_value(x),
                float(np.linalg.norm(x - x_next) / t), L_total, dx, dy, x, x_next,
            )
            x = x_next
            if cfg.time_budget is not None and time.perf_counter() - t0 > cfg.time_budget:
                break
    except Exception as exc:
        return rec.finish(x, x, incomplete=True, error=repr(exc))
    return rec.finish(x, x)


def _rule_dict(rule: StepSizeRule) -> dict:
    if rule.mode == "constant":
        return {"mode": "constant", "L": rule.L}
    return {"mode": "backtracking", "gamma": rule.gamma, "eta": rule.eta}


def _config_dict(cfg: SolverConfig, **extra) -> dict:
    d = {
        "alpha": cfg.alpha,
        "c": cfg.c,
        "step_rule": _rule_dict(cfg.step_rule),
        "max_iter": cfg.max_iter,
        "time_budget": cfg.time_budget,
        "seed": cfg.seed,
        "x0": None if cfg.x0 is None else list(np.asarray(cfg.x0, dtype=float)),
    }
    d.update(extra)
    return d

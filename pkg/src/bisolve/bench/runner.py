"""Experiment specification and the budgeted multi-method runner.

A spec names one instance, a list of method configurations, shared budgets,
and (optionally) rate-bound checks.  Iteration budgets keep runs exactly
reproducible; wall-clock budgets are advisory and machine dependent, so
comparisons under them are a proxy and never asserted by tests.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from ..instances import build_instance
from ..problems import BilevelInstance, CompositeOuter, Reference, SubgradientOuter
from ..prox import StepSizeRule
from ..solvers import (
    SolverConfig,
    reference_solution,
    run_bigsam_envelope,
    run_bisg,
    run_iterative_regularization,
)
from .bounds import assemble_constants, verify_bound
from .export import ExperimentResult, MethodResult
from .metrics import compute_phi_gap, fit_rate, phi_star_oracle

__all__ = ["MethodSpec", "ExperimentSpec", "run_experiment", "make_method_label"]

METHOD_IDS = ("bisg-v1", "bisg-v2", "bigsam", "iter-reg")


@dataclass
class MethodSpec:
    """One method entry of an experiment."""

    id: str
    alpha: float = 0.75
    c: float = 1.0
    label: Optional[str] = None
    step: Optional[dict] = None  # {"mode": "constant", "L": ...} or backtracking params
    delta: float = 1.0           # envelope smoothing (bigsam)
    lam0: float = 1.0            # initial regularization weight (iter-reg)
    omega_via_prox: bool = False  # iter-reg: absorb the outer term into the prox
    x0: Optional[list] = None

    def __post_init__(self):
        if self.id not in METHOD_IDS:
            raise ValueError(f"unknown method id {self.id!r}; known: {METHOD_IDS}")


def make_method_label(m: MethodSpec) -> str:
    # labels land in the CSV's first column, so keep them comma-free
    if m.label:
        return m.label
    if m.id.startswith("bisg"):
        return f"{m.id}[a={m.alpha:g};c={m.c:g}]"
    if m.id == "bigsam":
        return f"bigsam[delta={m.delta:g}]"
    return f"iter-reg[lam0={m.lam0:g}]"


@dataclass
class ExperimentSpec:
    """Instance + methods + budgets + requested checks."""

    instance: Union[str, dict]
    methods: List[MethodSpec]
    iters: int = 1000
    seconds: Optional[float] = None
    phi_star_source: str = "reference-run"  # or "analytic"
    seed: int = 0
    bounds: List[dict] = field(default_factory=list)
    fit: bool = True
    oracle_budget: int = 200_000

    def __post_init__(self):
        if not self.methods:
            raise ValueError("an experiment needs at least one method")
        if self.iters < 1:
            raise ValueError("iteration budget must be positive")
        if self.seconds is not None and self.seconds <= 0:
            raise ValueError("time budget must be positive")
        if self.phi_star_source not in ("analytic", "reference-run"):
            raise ValueError("phi_star_source must be 'analytic' or 'reference-run'")
        self.methods = [m if isinstance(m, MethodSpec) else MethodSpec(**m) for m in self.methods]

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls(**json.loads(text))

    def resolve_instance(self) -> BilevelInstance:
        desc = self.instance
        if isinstance(desc, str):
            desc = {"kind": desc, "params": {}}
        else:
            desc = {"kind": desc["kind"], "params": dict(desc.get("params", {}))}
        if desc["kind"] in ("colinear-ls", "logistic"):
            desc["params"].setdefault("seed", self.seed)
        return build_instance(desc)


def _step_rule(m: MethodSpec, inst: BilevelInstance) -> StepSizeRule:
    if m.step is None or m.step.get("mode", "constant") == "constant":
        L = (m.step or {}).get("L", inst.inner.smooth.lipschitz_grad)
        if L is None:
            raise ValueError(
                f"method {m.id}: constant step needs L; the instance declares none, "
                "supply step={'mode': 'constant', 'L': ...} or backtracking parameters"
            )
        return StepSizeRule.constant(L)
    if m.step["mode"] == "backtracking":
        return StepSizeRule.backtracking(m.step.get("gamma", 1.0), m.step.get("eta", 2.0))
    raise ValueError(f"unknown step mode {m.step['mode']!r}")


def _solver_config(m: MethodSpec, spec: ExperimentSpec, inst: BilevelInstance) -> SolverConfig:
    return SolverConfig(
        alpha=m.alpha,
        c=m.c,
        step_rule=_step_rule(m, inst),
        max_iter=spec.iters,
        time_budget=spec.seconds,
        seed=spec.seed,
        x0=None if m.x0 is None else np.asarray(m.x0, dtype=float),
    )


def _run_method(m: MethodSpec, spec: ExperimentSpec, inst: BilevelInstance, ref_point):
    cfg = _solver_config(m, spec, inst)
    if m.id in ("bisg-v1", "bisg-v2"):
        return run_bisg(inst, cfg, m.id[-2:], reference_point=ref_point)
    if m.id == "bigsam":
        return run_bigsam_envelope(inst, cfg, delta=m.delta, reference_point=ref_point)
    return run_iterative_regularization(
        inst, cfg,
        lambda_schedule=lambda k, lam0=m.lam0: lam0 / (k + 1.0),
        omega_via_prox=m.omega_via_prox,
        reference_point=ref_point,
    )


def _reference_data(spec: ExperimentSpec, inst: BilevelInstance):
    """Reference point and outer optimum: analytic when known, else a surrogate run.

    The surrogate is the final iterate of a 10x longer run; bound checks
    against it are approximate by construction and documented as such.
    """
    if inst.reference is not None and inst.reference.x_prime is not None:
        ref = inst.reference
        omega_star = ref.omega_star
        if omega_star is None:
            omega_star = inst.outer_value(np.asarray(ref.x_prime, dtype=float))
        return np.asarray(ref.x_prime, dtype=float), float(omega_star), "analytic"
    bisg_methods = [m for m in spec.methods if m.id.startswith("bisg")]
    if not bisg_methods:
        return None, None, "none"
    m = bisg_methods[0]
    cfg = _solver_config(m, spec, inst)
    point = reference_solution(inst, cfg, m.id[-2:], factor=10)
    return point, float(inst.outer_value(point)), "surrogate-run"


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every method of the spec and assemble metrics, fits, and bound reports."""
    inst = spec.resolve_instance()

    labels = [make_method_label(m) for m in spec.methods]
    if len(set(labels)) != len(labels):
        raise ValueError(f"method labels must be unique, got {labels}")

    need_reference = bool(spec.bounds) or (
        inst.reference is not None and inst.reference.x_prime is not None
    )
    ref_point, omega_star, ref_source = (None, None, "none")
    if need_reference:
        ref_point, omega_star, ref_source = _reference_data(spec, inst)

    if spec.phi_star_source == "analytic":
        if inst.reference is None or inst.reference.phi_star is None:
            raise ValueError("phi_star_source='analytic' needs a reference value on the instance")
        phi_star = float(inst.reference.phi_star)
        phi_star_info = {"source": "analytic"}
    else:
        oracle = phi_star_oracle(inst.inner, np.zeros(inst.dim), budget=spec.oracle_budget)
        phi_star = oracle.value
        phi_star_info = {
            "source": "reference-run",
            "certificate": oracle.certificate,
            "iterations": oracle.iterations,
            "low_accuracy": oracle.low_accuracy,
        }

    L_f = inst.inner.smooth.lipschitz_grad
    beta = inst.outer.sigma.strong_convexity if isinstance(inst.outer, CompositeOuter) else None

    results: List[MethodResult] = []
    for m, label in zip(spec.methods, labels):
        trace = _run_method(m, spec, inst, ref_point)
        trace.method = label
        gap = compute_phi_gap(trace, phi_star)
        fit = None
        if spec.fit and not trace.incomplete:
            try:
                fit = fit_rate(gap.k, gap.gap)
            except ValueError:
                fit = None
        constants = None
        if trace.dist_x is not None and len(trace):
            constants = assemble_constants(trace, lipschitz_grad=L_f)
        results.append(MethodResult(label=label, trace=trace, gap=gap,
                                    fit=fit, constants=constants))

    reference = Reference(x_prime=ref_point, phi_star=phi_star, omega_star=omega_star)
    by_label = {r.label: r for r in results}
    for req in spec.bounds:
        target = by_label.get(req["method"])
        if target is None:
            raise ValueError(f"bound request names unknown method {req['method']!r}")
        k_range = tuple(req["k_range"]) if "k_range" in req else None
        report = verify_bound(
            target.trace, req["bound"], reference,
            k_range=k_range, lipschitz_grad=L_f, beta=beta,
        )
        target.bounds.append(report)

    return ExperimentResult(
        instance_name=inst.name,
        spec=dict(spec.to_dict(), reference_source=ref_source),
        phi_star=phi_star,
        phi_star_info=phi_star_info,
        omega_star=omega_star,
        methods=results,
        include_time=spec.seconds is not None,
    )

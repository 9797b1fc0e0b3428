"""Benchmark harness: budgeted runs, metrics, bound checks, export, CLI."""

from .bounds import BOUND_KINDS, BoundReport, assemble_constants, verify_bound
from .export import ExperimentResult, MethodResult, export, load_trace_csv
from .metrics import (
    GapSeries,
    PhiStarResult,
    RateFit,
    compute_phi_gap,
    fit_rate,
    harmonic_sum_bound,
    phi_star_oracle,
)
from .runner import ExperimentSpec, MethodSpec, make_method_label, run_experiment

__all__ = [
    "BOUND_KINDS",
    "BoundReport",
    "assemble_constants",
    "verify_bound",
    "ExperimentResult",
    "MethodResult",
    "export",
    "load_trace_csv",
    "GapSeries",
    "PhiStarResult",
    "RateFit",
    "compute_phi_gap",
    "fit_rate",
    "harmonic_sum_bound",
    "phi_star_oracle",
    "ExperimentSpec",
    "MethodSpec",
    "make_method_label",
    "run_experiment",
]

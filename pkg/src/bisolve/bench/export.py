"""Result export: per-iteration CSV, JSON summary, SVG charts.

The CSV holds one row per iteration (``method,k,time_s,phi_gap,omega,
step_norm``) sorted by (method, k), with floats written in shortest
round-trip form so a load loses nothing.  In iteration-budget mode the
``time_s`` field is left empty: wall-clock readings would break the
byte-identical re-run guarantee, so they live in the JSON summary instead.
Re-running export on the same results is byte-identical for the CSV.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..solvers import Trace
from .bounds import BoundReport
from .metrics import GapSeries, RateFit

__all__ = [
    "MethodResult",
    "ExperimentResult",
    "export",
    "write_trace_csv",
    "write_summary_json",
    "write_svgs",
    "load_trace_csv",
]

CSV_HEADER = "method,k,time_s,phi_gap,omega,step_norm"


@dataclass
class MethodResult:
    """One method's run plus derived metrics."""

    label: str
    trace: Trace
    gap: GapSeries
    fit: Optional[RateFit] = None
    bounds: List[BoundReport] = field(default_factory=list)
    constants: Optional[dict] = None


@dataclass
class ExperimentResult:
    """Everything one experiment produced, ready for export."""

    instance_name: str
    spec: dict
    phi_star: float
    phi_star_info: dict
    omega_star: Optional[float]
    methods: List[MethodResult]
    include_time: bool = False


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def write_trace_csv(path: str, result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for m in sorted(result.methods, key=lambda m: m.label):
        if "," in m.label or "\n" in m.label:
            raise ValueError(f"method label {m.label!r} must not contain commas or newlines")
        tr = m.trace
        n = len(tr)
        for i in range(n):
            t = _fmt(tr.wall_time[i]) if result.include_time else ""
            lines.append(
                f"{m.label},{int(tr.k[i])},{t},{_fmt(m.gap.gap[i])},"
                f"{_fmt(tr.omega_y[i])},{_fmt(tr.step_norm[i])}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def load_trace_csv(path: str) -> Dict[str, Dict[str, np.ndarray]]:
    """Read an exported trace CSV back into per-method column arrays."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        per_method: Dict[str, Dict[str, list]] = {}
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}: line {line_no} has {len(parts)} fields, expected 6")
            method, k, t, gap, omega, snorm = parts
            cols = per_method.setdefault(
                method, {"k": [], "time_s": [], "phi_gap": [], "omega": [], "step_norm": []}
            )
            cols["k"].append(int(k))
            cols["time_s"].append(float(t) if t else math.nan)
            cols["phi_gap"].append(float(gap))
            cols["omega"].append(float(omega))
            cols["step_norm"].append(float(snorm))
    return {
        m: {
            "k": np.asarray(c["k"], dtype=np.int64),
            "time_s": np.asarray(c["time_s"]),
            "phi_gap": np.asarray(c["phi_gap"]),
            "omega": np.asarray(c["omega"]),
            "step_norm": np.asarray(c["step_norm"]),
        }
        for m, c in per_method.items()
    }


def _method_summary(m: MethodResult) -> dict:
    tr = m.trace
    out = {
        "label": m.label,
        "config": tr.config,
        "instance": tr.instance,
        "iterations": len(tr),
        "incomplete": tr.incomplete,
        "error": tr.error,
        "wall_time_s": float(tr.wall_time[-1]) if len(tr) else None,
        "final_phi_gap": float(m.gap.gap[-1]) if len(tr) else None,
        "final_omega": float(tr.omega_y[-1]) if len(tr) else None,
        "gap_clamped": m.gap.clamped,
        "d2": tr.d2 if len(tr) else None,
        "d1": float(tr.dist_x.max()) if tr.dist_x is not None and len(tr) else None,
        "constants": m.constants,
        "fit": None,
        "bounds": [b.to_dict() for b in m.bounds],
    }
    if m.fit is not None:
        out["fit"] = {
            "slope": m.fit.slope,
            "intercept": m.fit.intercept,
            "r_squared": m.fit.r_squared,
            "window": list(m.fit.window),
        }
    return out


def write_summary_json(path: str, result: ExperimentResult) -> str:
    doc = {
        "instance": result.instance_name,
        "spec": result.spec,
        "phi_star": dict(result.phi_star_info, value=result.phi_star),
        "omega_star": result.omega_star,
        "include_time": result.include_time,
        "methods": [_method_summary(m) for m in sorted(result.methods, key=lambda m: m.label)],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _geom_indices(n: int, count: int = 200) -> np.ndarray:
    if n <= 1:
        return np.arange(n)
    idx = np.unique(np.geomspace(1, n - 1, num=min(count, n - 1)).astype(int))
    return np.concatenate([[0], idx])


def write_svgs(outdir: str, result: ExperimentResult) -> List[str]:
    """Two line charts: inner gap progress, and outer value vs inner accuracy."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for m in sorted(result.methods, key=lambda m: m.label):
        ks = m.gap.k
        gaps = m.gap.gap
        xs = m.gap.time_s if result.include_time else ks
        mask = gaps > 0
        if result.include_time:
            ax.semilogy(xs[mask], gaps[mask], label=m.label, linewidth=1.2)
        else:
            pos = mask & (ks > 0)
            ax.loglog(ks[pos], gaps[pos], label=m.label, linewidth=1.2)
    ax.set_xlabel("time [s]" if result.include_time else "iteration")
    ax.set_ylabel("inner optimality gap")
    ax.set_title(result.instance_name)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    p1 = os.path.join(outdir, "phi_gap.svg")
    fig.savefig(p1, metadata={"Date": None})
    plt.close(fig)
    paths.append(p1)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for m in sorted(result.methods, key=lambda m: m.label):
        tr = m.trace
        idx = _geom_indices(len(tr))
        gaps = m.gap.gap[idx]
        omega = tr.omega_y[idx]
        mask = gaps > 0
        ax.plot(-np.log10(gaps[mask]), omega[mask], label=m.label, linewidth=1.2)
    ax.set_xlabel("inner accuracy  -log10(gap)")
    ax.set_ylabel("outer objective")
    ax.set_title(result.instance_name)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    p2 = os.path.join(outdir, "omega_vs_accuracy.svg")
    fig.savefig(p2, metadata={"Date": None})
    plt.close(fig)
    paths.append(p2)
    return paths


def export(result: ExperimentResult, outdir: str, formats=("csv", "json", "svg")) -> Dict[str, object]:
    """Write the requested artifacts into ``outdir`` and return their paths."""
    os.makedirs(outdir, exist_ok=True)
    written: Dict[str, object] = {}
    if "csv" in formats:
        written["csv"] = write_trace_csv(os.path.join(outdir, "trace.csv"), result)
    if "json" in formats:
        written["json"] = write_summary_json(os.path.join(outdir, "summary.json"), result)
    if "svg" in formats:
        written["svg"] = write_svgs(outdir, result)
    return written

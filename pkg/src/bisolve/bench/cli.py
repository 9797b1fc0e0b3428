"""Command-line front end.

Subcommands: ``run`` (one method on one instance), ``compare`` (a JSON
experiment spec), ``rates`` (log-log slope fit on an exported CSV),
``verify`` (bound check on an exported CSV plus its summary), and
``certify-ql`` (growth-bound falsification on preset mappings).

The environment variable ``BISOLVE_SEED`` overrides the default seed when
``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ..instances import elastic_net_ql
from ..quasi_lipschitz import (
    QLConstants,
    mixture_sampler,
    ql_certify,
    ql_chain_rule,
    ql_from_global_lipschitz,
)
from .bounds import check_alpha1_outer, check_inner_rate, check_outer_rate
from .export import export, load_trace_csv
from .metrics import fit_rate
from .runner import ExperimentSpec, MethodSpec, run_experiment

__all__ = ["main"]


def _resolve_seed(value):
    if value is not None:
        return value
    return int(os.environ.get("BISOLVE_SEED", "0"))


def _resolve_instance(text: str):
    if text.lstrip().startswith("{"):
        return json.loads(text)
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return json.load(fh)
    return text


def _cmd_run(args) -> int:
    method = MethodSpec(
        id=args.method,
        alpha=args.alpha,
        c=args.c,
        delta=args.delta,
        lam0=args.lam0,
        step=(
            {"mode": "backtracking", "gamma": args.gamma, "eta": args.eta}
            if args.step == "backtracking"
            else None
        ),
    )
    spec = ExperimentSpec(
        instance=_resolve_instance(args.instance),
        methods=[method],
        iters=args.iters,
        seconds=args.seconds,
        phi_star_source=args.phi_star,
        seed=_resolve_seed(args.seed),
    )
    result = run_experiment(spec)
    formats = ("csv", "json", "svg") if args.svg else ("csv", "json")
    written = export(result, args.out, formats=formats)
    m = result.methods[0]
    print(f"instance: {result.instance_name}")
    print(f"phi_star = {result.phi_star!r} ({result.phi_star_info['source']})")
    print(
        f"{m.label}: {len(m.trace)} iterations, final gap {m.gap.gap[-1]:.3e}, "
        f"final omega {m.trace.omega_y[-1]:.6g}"
    )
    if m.fit is not None:
        print(f"gap rate fit: slope {m.fit.slope:.3f} (r^2 {m.fit.r_squared:.3f})")
    print(f"wrote {written['csv']} and {written['json']}")
    return 0


def _cmd_compare(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = ExperimentSpec.from_json(fh.read())
    result = run_experiment(spec)
    written = export(result, args.out)
    print(f"instance: {result.instance_name}, phi_star = {result.phi_star!r}")
    for m in sorted(result.methods, key=lambda m: m.label):
        line = f"{m.label}: final gap {m.gap.gap[-1]:.3e}, final omega {m.trace.omega_y[-1]:.6g}"
        if m.trace.incomplete:
            line += f"  [INCOMPLETE: {m.trace.error}]"
        print(line)
        for report in m.bounds:
            print(f"  {report}")
    print(f"wrote: {', '.join(str(v) for v in written.values())}")
    bad = any(not b.ok for m in result.methods for b in m.bounds)
    return 1 if bad else 0


def _parse_window(text: str):
    if text == "auto":
        return None
    lo, _, hi = text.partition(":")
    return (float(lo), float(hi))


def _pick_method(columns: dict, wanted):
    if wanted is None:
        return sorted(columns)[0]
    if wanted not in columns:
        raise SystemExit(f"method {wanted!r} not in file; available: {sorted(columns)}")
    return wanted


def _cmd_rates(args) -> int:
    columns = load_trace_csv(args.trace)
    label = _pick_method(columns, args.method)
    cols = columns[label]
    fit = fit_rate(cols["k"], cols["phi_gap"], window=_parse_window(args.window))
    print(
        f"{label}: gap ~ k^({fit.slope:.4f}), intercept {fit.intercept:.4f}, "
        f"r^2 {fit.r_squared:.5f}, window [{fit.window[0]:.0f}, {fit.window[1]:.0f}]"
    )
    return 0


def _cmd_verify(args) -> int:
    columns = load_trace_csv(args.trace)
    label = _pick_method(columns, args.method)
    cols = columns[label]

    summary_path = args.summary or os.path.join(os.path.dirname(args.trace), "summary.json")
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    entry = next((m for m in summary["methods"] if m["label"] == label), None)
    if entry is None:
        raise SystemExit(f"method {label!r} not found in {summary_path}")
    constants = entry.get("constants")
    if not constants:
        raise SystemExit(
            "summary carries no bound constants for this method; "
            "rerun the experiment with bound checks requested"
        )

    k_range = tuple(args.k_range) if args.k_range else None
    if args.bound == "inner_rate":
        report = check_inner_rate(cols["phi_gap"], constants, k_range)
    elif args.bound == "outer_rate":
        report = check_outer_rate(cols["omega"], summary["omega_star"], constants, k_range)
    elif args.bound == "alpha1_outer":
        report = check_alpha1_outer(cols["omega"], summary["omega_star"], constants, k_range)
    else:
        raise SystemExit(
            "the geometric bound needs the x-iterate outer values, which the CSV "
            "does not carry; request it in the experiment spec instead"
        )
    print(report)
    for k, lhs, rhs in report.violations[:10]:
        print(f"  k={k}: lhs {lhs!r} > rhs {rhs!r}")
    return 0 if report.ok else 1


_QL_PRESETS = {
    "squared-l1": (
        "sub-gradient selector of the squared l1-norm",
        lambda n: (lambda x: 2.0 * np.abs(x).sum() * np.sign(x)),
        lambda n: ql_chain_rule(math.sqrt(n), 0.0, QLConstants(0.0, 2.0)),
    ),
    "l1-subgradient": (
        "sign selector of the l1-norm",
        lambda n: np.sign,
        lambda n: ql_from_global_lipschitz(math.sqrt(n)),
    ),
    "identity": (
        "identity mapping",
        lambda n: (lambda x: x),
        lambda n: QLConstants(0.0, 1.0),
    ),
    "elastic-net": (
        "sub-gradient selector of the elastic-net outer",
        lambda n: (lambda x: np.sign(x) + 0.1 * x),
        lambda n: elastic_net_ql(n),
    ),
}


def _cmd_certify_ql(args) -> int:
    desc, make_map, make_q = _QL_PRESETS[args.preset]
    F = make_map(args.dim)
    q = make_q(args.dim)
    sampler = mixture_sampler(args.dim, _resolve_seed(args.seed))
    witness = ql_certify(F, q, sampler, args.samples)
    if witness is None:
        print(
            f"{args.preset} (dim {args.dim}): certified over {args.samples} samples "
            f"with constants (d1={q.d1:g}, d2={q.d2:g}) -- evidence, not proof"
        )
        return 0
    print(f"{args.preset} (dim {args.dim}): counterexample found")
    print(f"  x = {witness!r}")
    print(f"  ||F(x)|| = {float(np.linalg.norm(F(witness))):.6g} "
          f"> bound {q.bound_at(float(np.linalg.norm(witness))):.6g}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bisolve", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one method on one instance and export results")
    run.add_argument("--instance", required=True,
                     help="preset id, path to a JSON descriptor, or inline JSON")
    run.add_argument("--method", default="bisg-v2",
                     choices=["bisg-v1", "bisg-v2", "bigsam", "iter-reg"])
    run.add_argument("--alpha", type=float, default=0.75)
    run.add_argument("--c", type=float, default=1.0)
    run.add_argument("--iters", type=int, default=1000)
    run.add_argument("--seconds", type=float, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--delta", type=float, default=1.0)
    run.add_argument("--lam0", type=float, default=1.0)
    run.add_argument("--step", choices=["constant", "backtracking"], default="constant")
    run.add_argument("--gamma", type=float, default=1.0)
    run.add_argument("--eta", type=float, default=2.0)
    run.add_argument("--phi-star", dest="phi_star", default="reference-run",
                     choices=["analytic", "reference-run"])
    run.add_argument("--out", required=True)
    run.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True)
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="run a JSON experiment spec")
    cmp_.add_argument("--spec", required=True)
    cmp_.add_argument("--out", required=True)
    cmp_.set_defaults(func=_cmd_compare)

    rates = sub.add_parser("rates", help="log-log slope fit on an exported trace CSV")
    rates.add_argument("trace")
    rates.add_argument("--window", default="auto", help="'auto' or 'kmin:kmax'")
    rates.add_argument("--method", default=None)
    rates.set_defaults(func=_cmd_rates)

    ver = sub.add_parser("verify", help="check a rate bound on an exported trace CSV")
    ver.add_argument("trace")
    ver.add_argument("--bound", required=True,
                     choices=["inner_rate", "outer_rate", "alpha1_outer", "linear_rate"])
    ver.add_argument("--method", default=None)
    ver.add_argument("--summary", default=None)
    ver.add_argument("--k-range", dest="k_range", type=int, nargs=2, default=None)
    ver.set_defaults(func=_cmd_verify)

    cert = sub.add_parser("certify-ql", help="falsification run for growth-bound constants")
    cert.add_argument("--preset", required=True, choices=sorted(_QL_PRESETS))
    cert.add_argument("--dim", type=int, default=50)
    cert.add_argument("--samples", type=int, default=10_000)
    cert.add_argument("--seed", type=int, default=None)
    cert.set_defaults(func=_cmd_certify_ql)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
